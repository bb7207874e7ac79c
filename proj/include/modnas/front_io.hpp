#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "modnas/pareto.hpp"

namespace modnas {

/// CSV with a header row `obj1,...,objM` and one point per row.
void write_front_csv(const std::filesystem::path& path, const std::vector<Vec>& points);
std::vector<Vec> read_front_csv(const std::filesystem::path& path);

nlohmann::json front_to_json(const ParetoFront& front);
ParetoFront front_from_json(const nlohmann::json& doc);

/// Renders doubles with round-trip precision.
std::string format_double(double v);

}  // namespace modnas
