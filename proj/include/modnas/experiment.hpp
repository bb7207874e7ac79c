#pragma once

// Glue shared by the CLI, the acceptance harness and the Python bindings:
// the default experiment, predictor training for every hardware objective,
// and one seeded search followed by profiling on every device.

#include <cstdint>
#include <memory>
#include <vector>

#include <json.hpp>

#include "modnas/benchmark.hpp"
#include "modnas/metapredictor.hpp"
#include "modnas/search.hpp"

namespace modnas {

struct ExperimentConfig {
  BenchmarkRecipe recipe;
  PredictorTrainOptions predictor;
  std::size_t predictor_hidden = 100;
  SearchConfig search;
  std::vector<std::uint64_t> seeds{0, 1, 2};
  bool exact_hardware = false;  // bypass the learned predictors

  nlohmann::json to_json() const;
};

/// The small default experiment: 4 x 4 choices, two objectives, three train
/// and two test devices, 24 preferences, three seeds. The search runs 3000
/// steps, so the hypernetwork learning rate is raised to 1e-2.
ExperimentConfig paper_mini();

/// One trained (or exact) surrogate per hardware objective m = 2..M.
struct HardwareModels {
  std::vector<std::unique_ptr<HardwareSurrogate>> models;
  std::vector<PredictorReport> reports;  // empty for exact surrogates

  std::vector<const HardwareSurrogate*> view() const;
};

HardwareModels train_hardware_models(const Benchmark& bench, const PredictorTrainOptions& options,
                                     std::size_t hidden = 100);
HardwareModels exact_hardware_models(const Benchmark& bench);

struct SeedRun {
  std::uint64_t seed = 0;
  SearchResult result;
  std::vector<ProfileResult> profiles;  // indexed by device id
};

/// Pretrains, searches with `config.seed` and profiles every device.
SeedRun run_seed(const Benchmark& bench, const SearchConfig& config,
                 const std::vector<const HardwareSurrogate*>& hardware);

/// Mean profile HV over the listed devices.
double mean_hv(const std::vector<ProfileResult>& profiles, const std::vector<std::size_t>& devices);

}  // namespace modnas
