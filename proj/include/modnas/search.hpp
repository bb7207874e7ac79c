#pragma once

// Search driver: per-device scalarized gradients, the multiple-gradient
// update of the hypernetwork, the alternative update schemes used for
// ablations, Pareto-front profiling and the random baselines.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "modnas/architect.hpp"
#include "modnas/benchmark.hpp"
#include "modnas/hypernet.hpp"
#include "modnas/metapredictor.hpp"
#include "modnas/moo.hpp"

namespace modnas {

enum class UpdateScheme { mgd, mean, sequential, mc };
enum class SurrogateMode { frozen, trainable };

UpdateScheme parse_scheme(const std::string& name);
std::string to_string(UpdateScheme s);
SurrogateMode parse_surrogate(const std::string& name);
std::string to_string(SurrogateMode s);

struct SearchConfig {
  std::size_t epochs = 30;
  std::size_t steps_per_epoch = 100;
  double lr_hypernet = 3e-4;      // xi_1
  double lr_surrogate = 1e-3;     // xi_2
  double weight_decay = 1e-3;
  Vec beta;                       // Dirichlet concentrations; empty = all ones
  double lambda = 1e-3;           // cosine penalty weight
  Estimator estimator = Estimator::reinmax;
  double tau = 1.0;
  UpdateScheme scheme = UpdateScheme::mgd;
  Vec constraints;                // c^m for m = 2..M; empty = all zero
  SurrogateMode surrogate = SurrogateMode::frozen;
  std::uint64_t seed = 0;
  std::size_t norm_samples = 256;
  std::size_t profile_count = 24;
  FrankWolfeOptions frank_wolfe;
  HypernetOptions hypernet;
  PretrainOptions pretrain;
  bool trace_hv = true;

  /// Fills empty beta / constraints for M objectives and checks ranges.
  void resolve(std::size_t num_objectives);
  nlohmann::json to_json() const;
  static SearchConfig from_json(const nlohmann::json& doc);
};

/// Frozen objective models for one benchmark.
struct ObjectiveModels {
  const Benchmark* bench = nullptr;
  const AccuracySurrogate* accuracy = nullptr;
  std::vector<const HardwareSurrogate*> hardware;  // objective m at index m - 2
};

/// Min-max statistics: one set for the accuracy objective, one per
/// (device, hardware objective).
struct NormState {
  NormStats accuracy;
  std::vector<std::vector<NormStats>> hardware;  // [device][m - 2]
};

/// Hardware statistics from `samples` surrogate evaluations per device
/// (every configuration when `samples` >= total); accuracy statistics seeded
/// the same way.
NormState initial_norm_state(const ObjectiveModels& models, std::size_t samples, std::uint64_t seed);
void reseed_accuracy_stats(NormState& state, const ObjectiveModels& models, std::size_t samples, std::uint64_t seed);

struct DeviceGradient {
  Vec grad;               // d loss / d Phi, flat parameter layout
  double loss = 0.0;      // r^T L - lambda cos(r, L)
  Vec losses;             // normalized L^1..L^M
  Vec raw;                // surrogate values before normalization
  std::vector<bool> active;
  ArchConfig config;
};

/// Scalarized loss and its gradient for one device with a given sample.
DeviceGradient device_gradient(MetaHypernetwork& net, const ObjectiveModels& models, const NormState& norm,
                               const SearchConfig& config, std::size_t device, const PreferenceVector& r,
                               const ArchSample& sample);

/// Same, drawing the sample from the (step, device) substream of `seed`.
DeviceGradient device_gradient(MetaHypernetwork& net, const ObjectiveModels& models, const NormState& norm,
                               const SearchConfig& config, std::size_t device, const PreferenceVector& r,
                               std::uint64_t seed, std::uint64_t step);

/// The loss of `device_gradient` as a function of the current parameters
/// with the sample held fixed (relaxed encoding, frozen gating and stats).
/// Its derivative equals DeviceGradient::grad.
double device_loss_frozen_sample(const MetaHypernetwork& net, const ObjectiveModels& models, const NormState& norm,
                                 const SearchConfig& config, std::size_t device, const PreferenceVector& r,
                                 const ArchSample& sample, const std::vector<bool>& active);

struct ProfileResult {
  std::size_t device = 0;
  std::vector<PreferenceVector> preferences;  // empty for random search
  std::vector<std::uint64_t> archs;           // one per preference / sample
  std::vector<Vec> points;                    // normalized true objectives per arch
  ParetoFront front;
  double hv = 0.0;                            // reference point all ones
  std::size_t unique_archs = 0;
};

/// Argmax readout of the hypernetwork at `count` equidistant preferences,
/// evaluated on the true tables.
ProfileResult profile_pareto(const MetaHypernetwork& net, const Benchmark& bench, std::size_t device,
                             std::size_t count = 24);

enum class BaselineKind { rs, rhpn };
BaselineKind parse_baseline(const std::string& name);

/// rs: `count` distinct uniformly drawn configurations. rhpn: a freshly
/// initialized hypernetwork profiled like a searched one.
ProfileResult run_baseline(BaselineKind kind, const Benchmark& bench, std::size_t device, std::size_t count,
                           std::uint64_t seed, const HypernetOptions& hypernet = {});

struct TraceRecord {
  std::size_t epoch = 0;
  std::size_t device = 0;
  bool train = true;
  double hv = 0.0;
  double mean_loss = 0.0;   // NaN for devices not visited in the epoch
  Vec mean_losses;          // per objective
  Vec mean_gamma;           // empty unless scheme = mgd
};

struct SearchTrace {
  std::vector<TraceRecord> records;
  std::vector<Vec> gammas;          // per step (mgd)
  Vec epoch_seconds;                // wall clock; kept out of the JSON-lines output
  std::string to_jsonl() const;
  /// Mean HV over `devices` at the last recorded epoch.
  double final_mean_hv(const std::vector<std::size_t>& devices) const;
};

struct SearchResult {
  MetaHypernetwork net;
  SearchTrace trace;
  std::unique_ptr<MlpAccuracySurrogate> surrogate;  // trainable mode only
};

/// Builds the hypernetwork for a benchmark and pretrains it to uniform logits.
MetaHypernetwork make_pretrained_hypernet(const Benchmark& bench, const SearchConfig& config,
                                          PretrainReport* report = nullptr);

/// Runs the search from `initial`. `hardware` holds one surrogate per
/// hardware objective (m = 2..M).
SearchResult search(const SearchConfig& config, const Benchmark& bench, MetaHypernetwork initial,
                    const std::vector<const HardwareSurrogate*>& hardware);

/// CSV of a profile: preference weights, architecture id and choices, normalized and raw objectives.
std::string profile_csv(const ProfileResult& profile, const Benchmark& bench);

}  // namespace modnas
