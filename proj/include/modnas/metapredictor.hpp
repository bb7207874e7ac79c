#pragma once

// Objective surrogates used by the search.
//
// Hardware objectives go through a HardwareSurrogate: either a learned
// MetaPredictor p_theta(encoding, d_t^m) or the exact multilinear extension of
// the true table. The accuracy objective goes through an AccuracySurrogate:
// the exact multilinear extension of the valid-split error table, or a small
// trainable MLP regressed on the train-split table during search.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "modnas/benchmark.hpp"
#include "modnas/param_store.hpp"

namespace modnas {

struct Prediction {
  double value = 0.0;
  Vec grad;  // d value / d encoding
};

class HardwareSurrogate {
 public:
  virtual ~HardwareSurrogate() = default;
  virtual std::size_t objective() const = 0;
  virtual Prediction evaluate(std::span<const double> encoding, const DeviceProfile& profile) const = 0;
};

class AccuracySurrogate {
 public:
  virtual ~AccuracySurrogate() = default;
  virtual Prediction evaluate(std::span<const double> encoding) const = 0;
};

/// Two-path feedforward predictor:
///   a = relu(A2 relu(A1 x + a1) + a2)      architecture path
///   b = relu(B2 relu(B1 d + b1) + b2)      device path
///   y = shift + scale * (h^T [a; b; a * b] + h0)
/// Targets are a device's table value divided by its largest reference
/// architecture value, so predictions are scale-free like the profiles.
class MetaPredictor : public HardwareSurrogate {
 public:
  MetaPredictor() = default;
  MetaPredictor(std::size_t encoding_size, std::size_t feature_size, std::size_t objective,
                std::size_t hidden = 100, std::uint64_t seed = 0);

  std::size_t objective() const override { return objective_; }
  std::size_t encoding_size() const noexcept { return enc_; }
  std::size_t feature_size() const noexcept { return feat_; }
  std::size_t hidden() const noexcept { return hidden_; }
  bool trained() const noexcept { return trained_; }
  bool frozen() const noexcept { return frozen_; }
  void freeze() noexcept { frozen_ = true; }

  /// Throws UsageError when untrained.
  Prediction evaluate(std::span<const double> encoding, const DeviceProfile& profile) const override;
  Prediction predict(std::span<const double> encoding, std::span<const double> features) const;

  const ParamStore& params() const noexcept { return params_; }
  /// Throws UsageError once frozen.
  ParamStore& mutable_params();

  /// Returns the standardized output `out` and accumulates
  /// weight * d (out - target)^2 / d params into the parameter gradients.
  double accumulate_mse_gradient(std::span<const double> encoding, std::span<const double> features,
                                 double target, double weight);
  void set_target_transform(double shift, double scale);
  double target_shift() const noexcept { return shift_; }
  double target_scale() const noexcept { return scale_; }
  void mark_trained() noexcept { trained_ = true; }

  void save(const std::filesystem::path& path, const std::string& benchmark_hash) const;
  /// When `benchmark_hash` is non-empty it must match the checkpoint tag.
  static MetaPredictor load(const std::filesystem::path& path, const std::string& benchmark_hash = {});

 private:
  struct Cache;
  double run(std::span<const double> x, std::span<const double> d, Cache& c) const;

  std::size_t enc_ = 0;
  std::size_t feat_ = 0;
  std::size_t objective_ = 2;
  std::size_t hidden_ = 0;
  double shift_ = 0.0;
  double scale_ = 1.0;
  bool trained_ = false;
  bool frozen_ = false;
  ParamStore params_;
};

struct PredictorTrainOptions {
  std::size_t sample_count = 0;   // (config, device) pairs drawn per objective; 0 = every train pair
  double train_fraction = 0.8;    // 1 = held-out set equals the training set
  std::size_t epochs = 150;
  std::size_t batch_size = 32;
  double lr = 1e-3;
  double weight_decay = 0.0;
  std::uint64_t seed = 0;
  bool shuffle_labels = false;    // negative control
};

struct DeviceTau {
  std::size_t device = 0;
  bool train = true;
  double tau = 0.0;          // held-out configs for train devices, all configs for test devices
  std::size_t pairs = 0;
};

struct PredictorReport {
  std::size_t objective = 2;
  Vec loss_history;          // mean training MSE per epoch (standardized units)
  double train_mse = 0.0;
  double holdout_mse = 0.0;  // standardized units
  std::vector<DeviceTau> taus;
  nlohmann::json to_json() const;
};

/// Scale-free regression target of a configuration on a device.
double predictor_target(const Benchmark& bench, std::size_t objective, std::size_t device, std::uint64_t config);

/// Trains on (config, train device) pairs with a per-device stratified
/// split; deterministic per seed. Throws TrainingError on divergence.
PredictorReport train_predictor(MetaPredictor& net, const Benchmark& bench, const PredictorTrainOptions& options);

/// Kendall tau-b between two equally long samples.
double kendall_tau(std::span<const double> a, std::span<const double> b);

/// Multilinear extension of the true hardware table: zero model error.
class ExactHardwareSurrogate : public HardwareSurrogate {
 public:
  ExactHardwareSurrogate(const Benchmark& bench, std::size_t objective) : bench_(&bench), objective_(objective) {}
  std::size_t objective() const override { return objective_; }
  Prediction evaluate(std::span<const double> encoding, const DeviceProfile& profile) const override;

 private:
  const Benchmark* bench_;
  std::size_t objective_;
};

/// Multilinear extension of the valid-split error table.
class ExactAccuracySurrogate : public AccuracySurrogate {
 public:
  explicit ExactAccuracySurrogate(const Benchmark& bench) : bench_(&bench) {}
  Prediction evaluate(std::span<const double> encoding) const override;

 private:
  const Benchmark* bench_;
};

/// f_w(x) = v^T relu(W x + b) + c, trained on the train-split error table.
class MlpAccuracySurrogate : public AccuracySurrogate {
 public:
  MlpAccuracySurrogate(std::size_t encoding_size, std::size_t hidden = 32, std::uint64_t seed = 0);
  Prediction evaluate(std::span<const double> encoding) const override;
  /// Flat gradient of (f_w(x) - target)^2 with respect to w.
  Vec loss_gradient(std::span<const double> encoding, double target) const;
  ParamStore& params() noexcept { return params_; }
  const ParamStore& params() const noexcept { return params_; }

 private:
  std::size_t enc_;
  std::size_t hidden_;
  ParamStore params_;
};

}  // namespace modnas
