#include "modnas/experiment.hpp"

#include "modnas/errors.hpp"

namespace modnas {

nlohmann::json ExperimentConfig::to_json() const {
  return {{"recipe", recipe.to_json()},
          {"predictor",
           {{"sample_count", predictor.sample_count},
            {"train_fraction", predictor.train_fraction},
            {"epochs", predictor.epochs},
            {"batch_size", predictor.batch_size},
            {"lr", predictor.lr},
            {"weight_decay", predictor.weight_decay},
            {"seed", predictor.seed},
            {"hidden", predictor_hidden}}},
          {"search", search.to_json()},
          {"seeds", seeds},
          {"exact_hardware", exact_hardware}};
}

ExperimentConfig paper_mini() {
  ExperimentConfig cfg;
  cfg.search.lr_hypernet = 1e-2;
  return cfg;
}

std::vector<const HardwareSurrogate*> HardwareModels::view() const {
  std::vector<const HardwareSurrogate*> out;
  for (const auto& m : models) out.push_back(m.get());
  return out;
}

HardwareModels train_hardware_models(const Benchmark& bench, const PredictorTrainOptions& options,
                                     std::size_t hidden) {
  HardwareModels out;
  for (std::size_t m = 2; m <= bench.num_objectives(); ++m) {
    auto net = std::make_unique<MetaPredictor>(bench.space.encoding_size(), bench.recipe.profile_size, m, hidden,
                                               options.seed + m);
    out.reports.push_back(train_predictor(*net, bench, options));
    net->freeze();
    out.models.push_back(std::move(net));
  }
  return out;
}

HardwareModels exact_hardware_models(const Benchmark& bench) {
  HardwareModels out;
  for (std::size_t m = 2; m <= bench.num_objectives(); ++m) {
    out.models.push_back(std::make_unique<ExactHardwareSurrogate>(bench, m));
  }
  return out;
}

SeedRun run_seed(const Benchmark& bench, const SearchConfig& config,
                 const std::vector<const HardwareSurrogate*>& hardware) {
  SeedRun run{config.seed, search(config, bench, make_pretrained_hypernet(bench, config), hardware), {}};
  for (const auto& dev : bench.devices) {
    run.profiles.push_back(profile_pareto(run.result.net, bench, dev.id, config.profile_count));
  }
  return run;
}

double mean_hv(const std::vector<ProfileResult>& profiles, const std::vector<std::size_t>& devices) {
  if (devices.empty()) throw ParameterError("mean_hv needs at least one device");
  double s = 0.0;
  for (auto d : devices) {
    if (d >= profiles.size()) throw IndexError("device " + std::to_string(d) + " has no profile");
    s += profiles[d].hv;
  }
  return s / static_cast<double>(devices.size());
}

}  // namespace modnas
