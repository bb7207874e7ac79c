#include "modnas/benchmark.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "modnas/errors.hpp"
#include "modnas/hash.hpp"
#include "modnas/param_store.hpp"
#include "modnas/rng.hpp"

namespace modnas {

void BenchmarkRecipe::validate() const {
  if (choices.empty()) throw RecipeError("recipe needs at least one dimension");
  for (std::size_t c : choices) {
    if (c < 2) throw RecipeError("every dimension needs at least 2 choices");
  }
  if (num_objectives < 2) throw RecipeError("recipe needs at least 2 objectives");
  if (num_devices < 1) throw RecipeError("recipe needs at least one device");
  if (num_train_devices < 1 || num_train_devices > num_devices) {
    throw RecipeError("train device count must be in [1, num_devices]");
  }
  if (profile_size < 1) throw RecipeError("profile size must be positive");
  if (!(heterogeneity >= 0.0) || !std::isfinite(heterogeneity)) throw RecipeError("heterogeneity must be >= 0");
  if (!(conflict >= 0.0 && conflict <= 1.0)) throw RecipeError("conflict must lie in [0, 1]");
  if (!(noise >= 0.0) || !std::isfinite(noise)) throw RecipeError("noise must be >= 0");
  if (!(interaction >= 0.0) || !std::isfinite(interaction)) throw RecipeError("interaction must be >= 0");
}

nlohmann::json BenchmarkRecipe::to_json() const {
  return {{"seed", seed},
          {"choices", choices},
          {"num_objectives", num_objectives},
          {"num_devices", num_devices},
          {"num_train_devices", num_train_devices},
          {"profile_size", profile_size},
          {"heterogeneity", heterogeneity},
          {"conflict", conflict},
          {"noise", noise},
          {"interaction", interaction},
          {"enumeration_cap", enumeration_cap}};
}

BenchmarkRecipe BenchmarkRecipe::from_json(const nlohmann::json& doc) {
  BenchmarkRecipe r;
  r.seed = doc.at("seed").get<std::uint64_t>();
  r.choices = doc.at("choices").get<std::vector<std::size_t>>();
  r.num_objectives = doc.at("num_objectives").get<std::size_t>();
  r.num_devices = doc.at("num_devices").get<std::size_t>();
  r.num_train_devices = doc.at("num_train_devices").get<std::size_t>();
  r.profile_size = doc.at("profile_size").get<std::size_t>();
  r.heterogeneity = doc.at("heterogeneity").get<double>();
  r.conflict = doc.at("conflict").get<double>();
  r.noise = doc.at("noise").get<double>();
  r.interaction = doc.at("interaction").get<double>();
  r.enumeration_cap = doc.value("enumeration_cap", ArchSpace::kDefaultEnumerationCap);
  return r;
}

void ObjectiveTable::update_range() {
  if (values.empty()) throw BenchmarkError("empty objective table");
  if (!all_finite(values)) throw BenchmarkError("objective table contains non-finite values");
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  lo = *mn;
  hi = *mx;
}

double ObjectiveTable::normalized(double v) const { return hi > lo ? (v - lo) / (hi - lo) : 0.0; }

std::span<const double> DeviceProfile::objective(std::size_t m) const {
  if (m < 2 || (m - 1) * per_objective > features.size()) {
    throw IndexError("device profile has no block for objective " + std::to_string(m));
  }
  return std::span<const double>(features).subspan((m - 2) * per_objective, per_objective);
}

const Device& Benchmark::device(std::size_t id) const {
  if (id >= devices.size()) throw BenchmarkError("unknown device " + std::to_string(id));
  return devices[id];
}

const ObjectiveTable& Benchmark::table(std::size_t objective, std::size_t dev) const {
  if (objective == 1) return error_valid;
  const Device& d = device(dev);
  if (objective < 2 || objective - 2 >= d.hardware.size()) {
    throw BenchmarkError("device " + std::to_string(dev) + " has no table for objective " +
                         std::to_string(objective));
  }
  return d.hardware[objective - 2];
}

std::vector<std::size_t> Benchmark::train_devices() const {
  std::vector<std::size_t> out;
  for (const auto& d : devices) {
    if (d.train) out.push_back(d.id);
  }
  return out;
}

std::vector<std::size_t> Benchmark::test_devices() const {
  std::vector<std::size_t> out;
  for (const auto& d : devices) {
    if (!d.train) out.push_back(d.id);
  }
  return out;
}

Vec Benchmark::objectives(std::size_t dev, std::uint64_t config) const {
  Vec out(num_objectives());
  for (std::size_t m = 1; m <= num_objectives(); ++m) out[m - 1] = table(m, dev).values.at(config);
  return out;
}

Vec Benchmark::normalized_objectives(std::size_t dev, std::uint64_t config) const {
  Vec out(num_objectives());
  for (std::size_t m = 1; m <= num_objectives(); ++m) {
    const auto& t = table(m, dev);
    out[m - 1] = t.normalized(t.values.at(config));
  }
  return out;
}

nlohmann::json Benchmark::to_json() const {
  nlohmann::json doc;
  doc["schema"] = kSchemaName;
  doc["version"] = kSchemaVersion;
  doc["recipe"] = recipe.to_json();
  doc["space"] = space.to_json();
  doc["tables"] = {{"error_train", error_train.values}, {"error_valid", error_valid.values}};
  auto devs = nlohmann::json::array();
  for (const auto& d : devices) {
    nlohmann::json jd{{"id", d.id}, {"name", d.name}, {"split", d.train ? "train" : "test"}};
    auto tabs = nlohmann::json::object();
    for (const auto& t : d.hardware) tabs[std::to_string(t.objective)] = t.values;
    jd["tables"] = std::move(tabs);
    jd["profile"] = profiles.at(d.id).features;
    devs.push_back(std::move(jd));
  }
  doc["devices"] = std::move(devs);
  doc["reference_configs"] = reference_configs;
  return doc;
}

Benchmark Benchmark::from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("schema").get<std::string>() != kSchemaName) throw SchemaError("not a benchmark document");
    const int version = doc.at("version").get<int>();
    if (version != kSchemaVersion) throw SchemaError("unsupported benchmark version " + std::to_string(version));
    Benchmark b;
    b.recipe = BenchmarkRecipe::from_json(doc.at("recipe"));
    b.space = ArchSpace::from_json(doc.at("space"));
    b.error_train = {1, -1, doc.at("tables").at("error_train").get<Vec>()};
    b.error_valid = {1, -1, doc.at("tables").at("error_valid").get<Vec>()};
    for (auto* t : {&b.error_train, &b.error_valid}) {
      check_size(t->values.size(), b.space.total_configs(), "error table");
      t->update_range();
    }
    b.reference_configs = doc.at("reference_configs").get<std::vector<std::uint64_t>>();
    for (const auto& jd : doc.at("devices")) {
      Device d;
      d.id = jd.at("id").get<std::size_t>();
      d.name = jd.at("name").get<std::string>();
      d.train = jd.at("split").get<std::string>() == "train";
      if (d.id != b.devices.size()) throw SchemaError("device ids must be consecutive");
      for (std::size_t m = 2; m <= b.recipe.num_objectives; ++m) {
        ObjectiveTable t{m, static_cast<std::int64_t>(d.id), jd.at("tables").at(std::to_string(m)).get<Vec>()};
        check_size(t.values.size(), b.space.total_configs(), "hardware table");
        t.update_range();
        d.hardware.push_back(std::move(t));
      }
      DeviceProfile p{d.id, b.recipe.profile_size, jd.at("profile").get<Vec>()};
      check_size(p.features.size(), (b.recipe.num_objectives - 1) * b.recipe.profile_size, "device profile");
      b.profiles.push_back(std::move(p));
      b.devices.push_back(std::move(d));
    }
    return b;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed benchmark: ") + e.what());
  } catch (const ShapeError& e) {
    throw SchemaError(std::string("malformed benchmark: ") + e.what());
  }
}

std::string Benchmark::dump() const { return to_json().dump(); }

void Benchmark::save(const std::filesystem::path& path) const { write_text_atomic(path, dump()); }

Benchmark Benchmark::load(const std::filesystem::path& path) {
  try {
    return from_json(nlohmann::json::parse(read_text(path)));
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

std::string Benchmark::content_hash() const { return sha256_hex(dump()); }

namespace {

double uniform_in(Rng& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

}  // namespace

Benchmark generate_benchmark(const BenchmarkRecipe& recipe) {
  recipe.validate();
  Benchmark b;
  b.recipe = recipe;
  b.space = ArchSpace(recipe.choices, recipe.enumeration_cap);
  b.space.require_enumerable();
  if (recipe.profile_size > b.space.total_configs()) {
    throw RecipeError("profile size exceeds the number of configurations");
  }
  const std::size_t D = b.space.dims();
  const double kappa = recipe.conflict;

  Rng rng = Rng::substream(recipe.seed, {0});
  // capacity score per choice: strictly increasing from 0 to 1
  std::vector<Vec> cap(D);
  for (std::size_t d = 0; d < D; ++d) {
    const std::size_t n = b.space.choices(d);
    cap[d].assign(n, 0.0);
    for (std::size_t j = 1; j < n; ++j) cap[d][j] = cap[d][j - 1] + uniform_in(rng, 0.5, 1.5);
    for (double& s : cap[d]) s /= cap[d][n - 1];
  }
  // accuracy and cost importance are drawn independently per dimension, so
  // dimensions differ in how much error they remove per unit of cost
  Vec weight(D), global_cost(D);
  for (double& a : weight) a = std::exp(uniform_in(rng, -1.0, 1.0));
  for (double& c : global_cost) c = std::exp(uniform_in(rng, -1.0, 1.0));
  const double wsum = std::accumulate(weight.begin(), weight.end(), 0.0);
  for (double& a : weight) a /= wsum;
  std::vector<Vec> choice_noise(D);
  for (std::size_t d = 0; d < D; ++d) {
    choice_noise[d].resize(b.space.choices(d));
    for (double& v : choice_noise[d]) v = rng.normal();
  }
  Matrix pair_coef(D, D);
  for (std::size_t d = 0; d < D; ++d) {
    for (std::size_t e = d + 1; e < D; ++e) pair_coef(d, e) = rng.normal();
  }

  const std::uint64_t total = b.space.total_configs();
  b.error_train = {1, -1, Vec(total)};
  b.error_valid = {1, -1, Vec(total)};
  Rng valid_rng = Rng::substream(recipe.seed, {1});
  for (std::uint64_t idx = 0; idx < total; ++idx) {
    const ArchConfig c = b.space.config_at(idx);
    double capacity = 0.0, noise = 0.0, inter = 0.0;
    for (std::size_t d = 0; d < D; ++d) {
      const double s = cap[d][c.choices[d]];
      capacity += weight[d] * s;
      noise += weight[d] * choice_noise[d][c.choices[d]];
      for (std::size_t e = d + 1; e < D; ++e) inter += pair_coef(d, e) * (s - 0.5) * (cap[e][c.choices[e]] - 0.5);
    }
    // diminishing returns: error falls steeply at low capacity and flattens out
    const double gain = 1.0 - capacity;
    const double shape = kappa * gain * gain + (1.0 - kappa) * capacity;
    const double err = 0.08 + 0.6 * (shape + kappa * (recipe.noise * noise + recipe.interaction * inter));
    b.error_train.values[idx] = err;
    b.error_valid.values[idx] = err + kappa * recipe.noise * uniform_in(valid_rng, -0.5, 0.5);
  }
  b.error_train.update_range();
  b.error_valid.update_range();

  for (std::size_t t = 0; t < recipe.num_devices; ++t) {
    Rng drng = Rng::substream(recipe.seed, {2, t});
    Device dev;
    dev.id = t;
    dev.name = "device-" + std::to_string(t);
    dev.train = t < recipe.num_train_devices;
    const double scale = std::exp(uniform_in(drng, std::log(1.0), std::log(20.0)));
    const double offset = uniform_in(drng, 0.1, 0.5);
    Vec base_weight(D);
    for (std::size_t d = 0; d < D; ++d) base_weight[d] = global_cost[d] * std::exp(recipe.heterogeneity * drng.normal());
    for (std::size_t m = 2; m <= recipe.num_objectives; ++m) {
      Vec w(D), curvature(D);
      for (std::size_t d = 0; d < D; ++d) {
        w[d] = m == 2 ? base_weight[d] : base_weight[d] * std::exp(recipe.heterogeneity * drng.normal());
        curvature[d] = std::exp(0.5 * recipe.heterogeneity * drng.normal());
      }
      const double mscale = m == 2 ? scale : scale * uniform_in(drng, 0.5, 2.0);
      ObjectiveTable tab{m, static_cast<std::int64_t>(t), Vec(total)};
      for (std::uint64_t idx = 0; idx < total; ++idx) {
        const ArchConfig c = b.space.config_at(idx);
        double cost = offset, inter = 0.0;
        for (std::size_t d = 0; d < D; ++d) {
          const double s = cap[d][c.choices[d]];
          cost += w[d] * std::pow(s, curvature[d]);
          for (std::size_t e = d + 1; e < D; ++e) inter += s * cap[e][c.choices[e]];
        }
        tab.values[idx] = mscale * (cost + recipe.interaction * inter);
      }
      tab.update_range();
      if (!(tab.hi > tab.lo)) throw RecipeError("hardware table has zero variance");
      dev.hardware.push_back(std::move(tab));
    }
    b.devices.push_back(std::move(dev));
  }
  if (!(b.error_valid.hi > b.error_valid.lo)) throw RecipeError("error table has zero variance");

  // reference architectures: distinct quasi-random configurations shared by all devices
  Rng ref_rng = Rng::substream(recipe.seed, {3});
  std::vector<std::uint64_t> refs;
  while (refs.size() < recipe.profile_size) {
    const std::uint64_t idx = ref_rng.below(total);
    if (std::find(refs.begin(), refs.end(), idx) == refs.end()) refs.push_back(idx);
  }
  b.reference_configs = refs;
  for (std::size_t t = 0; t < b.devices.size(); ++t) b.profiles.push_back(build_device_profile(b, t, refs));
  return b;
}

DeviceProfile build_device_profile(const Benchmark& bench, std::size_t dev,
                                   std::span<const std::uint64_t> reference_configs) {
  const Device& d = bench.device(dev);
  if (d.hardware.size() + 1 != bench.num_objectives()) {
    throw BenchmarkError("device " + std::to_string(dev) + " is missing hardware tables");
  }
  DeviceProfile p{dev, reference_configs.size(), {}};
  for (const auto& tab : d.hardware) {
    Vec block;
    for (std::uint64_t idx : reference_configs) block.push_back(tab.values.at(idx));
    const double mx = *std::max_element(block.begin(), block.end());
    if (!(mx > 0.0)) throw BenchmarkError("reference evaluations must be positive");
    for (double v : block) p.features.push_back(v / mx);
  }
  return p;
}

ParetoFront enumerate_true_front(const Benchmark& bench, std::size_t dev, std::vector<std::size_t> objectives) {
  bench.space.require_enumerable();
  if (objectives.empty()) {
    for (std::size_t m = 1; m <= bench.num_objectives(); ++m) objectives.push_back(m);
  }
  std::vector<const ObjectiveTable*> tables;
  for (std::size_t m : objectives) tables.push_back(&bench.table(m, dev));
  std::vector<FrontPoint> pts;
  pts.reserve(bench.space.total_configs());
  for (std::uint64_t idx = 0; idx < bench.space.total_configs(); ++idx) {
    Vec v(tables.size());
    for (std::size_t k = 0; k < tables.size(); ++k) v[k] = tables[k]->normalized(tables[k]->values[idx]);
    pts.push_back({std::move(v), static_cast<std::int64_t>(idx)});
  }
  return nondominated_filter(std::move(pts));
}

}  // namespace modnas
