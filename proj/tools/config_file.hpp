#pragma once

#include <filesystem>

#include "modnas/experiment.hpp"

namespace modnas::cli {

/// Reads a flat INI file on top of `base`. Sections: [benchmark] (recipe
/// keys), [predictor], [search], [hypernet], [pretrain], [frank_wolfe] and
/// [experiment] (seeds, exact_hardware). Keys use the JSON field names of
/// the corresponding structs; list values are comma separated.
/// Unknown sections or keys and malformed values raise UsageError.
ExperimentConfig load_config(const std::filesystem::path& path, const ExperimentConfig& base);

}  // namespace modnas::cli
