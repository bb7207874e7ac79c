#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "modnas/archspace.hpp"
#include "modnas/pareto.hpp"

namespace modnas {

/// Knobs of the synthetic multi-device benchmark.
///
/// Every configuration gets a capacity score in [0, 1]. Error falls with
/// capacity when `conflict` = 1 and rises with it when `conflict` = 0;
/// hardware costs always rise with capacity, so `conflict` sets how strongly
/// accuracy trades against the hardware objectives. Per-choice noise,
/// pairwise interactions and the valid-split perturbation are scaled by
/// `conflict`, so `conflict` = 0 yields a single Pareto-optimal configuration.
/// `heterogeneity` spreads per-dimension cost weights and curvatures across
/// devices.
struct BenchmarkRecipe {
  std::uint64_t seed = 7;
  std::vector<std::size_t> choices{4, 4, 4, 4};
  std::size_t num_objectives = 2;  // M: error + (M - 1) hardware objectives
  std::size_t num_devices = 5;
  std::size_t num_train_devices = 3;
  std::size_t profile_size = 10;  // F reference architectures
  double heterogeneity = 0.25;    // >= 0
  double conflict = 1.0;          // [0, 1]
  double noise = 0.02;            // >= 0
  double interaction = 0.05;      // >= 0
  std::uint64_t enumeration_cap = ArchSpace::kDefaultEnumerationCap;

  void validate() const;
  nlohmann::json to_json() const;
  static BenchmarkRecipe from_json(const nlohmann::json& doc);
};

/// Dense table of one objective over all configurations. Objective 1 is the
/// classification error; objectives 2..M are hardware costs of one device.
struct ObjectiveTable {
  std::size_t objective = 1;
  std::int64_t device = -1;
  Vec values;
  double lo = 0.0;  // min over all configurations
  double hi = 0.0;  // max over all configurations

  void update_range();
  /// (v - lo) / (hi - lo)
  double normalized(double v) const;
};

/// Per-device feature vector: hardware-objective values of the fixed
/// reference architectures, each objective block divided by its own maximum.
struct DeviceProfile {
  std::size_t device = 0;
  std::size_t per_objective = 0;  // F
  Vec features;                   // (M - 1) * F, objective 2 first

  /// Feature block of hardware objective m (m >= 2).
  std::span<const double> objective(std::size_t m) const;
};

struct Device {
  std::size_t id = 0;
  std::string name;
  bool train = true;
  std::vector<ObjectiveTable> hardware;  // objective m at index m - 2
};

class Benchmark {
 public:
  static constexpr const char* kSchemaName = "modnas.benchmark";
  static constexpr int kSchemaVersion = 1;

  BenchmarkRecipe recipe;
  ArchSpace space;
  ObjectiveTable error_train;
  ObjectiveTable error_valid;
  std::vector<Device> devices;
  std::vector<std::uint64_t> reference_configs;
  std::vector<DeviceProfile> profiles;  // indexed by device id

  std::size_t num_objectives() const noexcept { return recipe.num_objectives; }
  const Device& device(std::size_t id) const;
  /// Objective 1 resolves to the valid-split error table.
  const ObjectiveTable& table(std::size_t objective, std::size_t device) const;
  std::vector<std::size_t> train_devices() const;
  std::vector<std::size_t> test_devices() const;

  /// True objective vector of a configuration on a device, raw units.
  Vec objectives(std::size_t device, std::uint64_t config) const;
  /// Same, min-max normalized per table into [0, 1].
  Vec normalized_objectives(std::size_t device, std::uint64_t config) const;

  nlohmann::json to_json() const;
  static Benchmark from_json(const nlohmann::json& doc);
  std::string dump() const;
  void save(const std::filesystem::path& path) const;
  static Benchmark load(const std::filesystem::path& path);
  /// SHA-256 of the serialized document.
  std::string content_hash() const;
};

Benchmark generate_benchmark(const BenchmarkRecipe& recipe);

DeviceProfile build_device_profile(const Benchmark& bench, std::size_t device,
                                   std::span<const std::uint64_t> reference_configs);

/// Exact nondominated set over all configurations in normalized objective
/// space. `objectives` lists objective ids (default: 1..M). Points carry the
/// flat configuration index and are sorted lexicographically.
ParetoFront enumerate_true_front(const Benchmark& bench, std::size_t device,
                                 std::vector<std::size_t> objectives = {});

}  // namespace modnas
