#include "modnas/metapredictor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "modnas/adam.hpp"
#include "modnas/errors.hpp"
#include "modnas/front_io.hpp"
#include "modnas/layers.hpp"
#include "modnas/rng.hpp"

namespace modnas {

namespace {

void he_init(ParamBlock& w, std::size_t fan_in, Rng& rng) {
  const double sd = std::sqrt(2.0 / static_cast<double>(fan_in));
  for (double& v : w.value) v = rng.normal(0.0, sd);
}

// dx = W^T dy for a (out, in) row-major weight.
Vec input_grad(std::span<const double> w, std::size_t in, std::span<const double> dy) {
  Vec dx(in, 0.0);
  for (std::size_t o = 0; o < dy.size(); ++o) {
    if (dy[o] == 0.0) continue;
    const double* row = w.data() + o * in;
    for (std::size_t i = 0; i < in; ++i) dx[i] += dy[o] * row[i];
  }
  return dx;
}

std::size_t meta_size(const ParamStore& p, const char* key) {
  const auto it = p.metadata().find(key);
  if (it == p.metadata().end()) throw SchemaError(std::string("predictor checkpoint lacks '") + key + "'");
  return static_cast<std::size_t>(std::stoull(it->second));
}

}  // namespace

struct MetaPredictor::Cache {
  Vec x, d;
  Vec za1, a1, za2, a2;
  Vec zb1, b1, zb2, b2;
  Vec joint;
};

MetaPredictor::MetaPredictor(std::size_t encoding_size, std::size_t feature_size, std::size_t objective,
                             std::size_t hidden, std::uint64_t seed)
    : enc_(encoding_size), feat_(feature_size), objective_(objective), hidden_(hidden) {
  if (enc_ == 0 || feat_ == 0 || hidden_ == 0) throw ParameterError("predictor sizes must be positive");
  if (objective_ < 2) throw ParameterError("predictors model hardware objectives (m >= 2)");
  Rng rng(seed);
  he_init(params_.add("arch.l1.weight", {hidden_, enc_}), enc_, rng);
  params_.add("arch.l1.bias", {hidden_});
  he_init(params_.add("arch.l2.weight", {hidden_, hidden_}), hidden_, rng);
  params_.add("arch.l2.bias", {hidden_});
  he_init(params_.add("dev.l1.weight", {hidden_, feat_}), feat_, rng);
  params_.add("dev.l1.bias", {hidden_});
  he_init(params_.add("dev.l2.weight", {hidden_, hidden_}), hidden_, rng);
  params_.add("dev.l2.bias", {hidden_});
  he_init(params_.add("head.weight", {1, 3 * hidden_}), 3 * hidden_, rng);
  params_.add("head.bias", {1});
}

ParamStore& MetaPredictor::mutable_params() {
  if (frozen_) throw UsageError("predictor is frozen; its parameters cannot be modified");
  return params_;
}

void MetaPredictor::set_target_transform(double shift, double scale) {
  if (frozen_) throw UsageError("predictor is frozen; its parameters cannot be modified");
  if (!(scale > 0.0) || !std::isfinite(shift)) throw ParameterError("invalid predictor target transform");
  shift_ = shift;
  scale_ = scale;
}

double MetaPredictor::run(std::span<const double> x, std::span<const double> d, Cache& c) const {
  check_size(x.size(), enc_, "predictor encoding");
  check_size(d.size(), feat_, "predictor device feature");
  const auto& p = params_;
  c.x.assign(x.begin(), x.end());
  c.d.assign(d.begin(), d.end());
  c.za1 = linear_forward(x, p.value("arch.l1.weight"), p.value("arch.l1.bias"));
  c.a1 = relu_forward(c.za1);
  c.za2 = linear_forward(c.a1, p.value("arch.l2.weight"), p.value("arch.l2.bias"));
  c.a2 = relu_forward(c.za2);
  c.zb1 = linear_forward(d, p.value("dev.l1.weight"), p.value("dev.l1.bias"));
  c.b1 = relu_forward(c.zb1);
  c.zb2 = linear_forward(c.b1, p.value("dev.l2.weight"), p.value("dev.l2.bias"));
  c.b2 = relu_forward(c.zb2);
  // [a; b; a * b]: the product block lets the device path reorder architectures
  c.joint = c.a2;
  c.joint.insert(c.joint.end(), c.b2.begin(), c.b2.end());
  for (std::size_t i = 0; i < hidden_; ++i) c.joint.push_back(c.a2[i] * c.b2[i]);
  return linear_forward(c.joint, p.value("head.weight"), p.value("head.bias"))[0];
}

Prediction MetaPredictor::predict(std::span<const double> encoding, std::span<const double> features) const {
  if (!trained_) throw UsageError("predictor has not been trained");
  Cache c;
  const double out = run(encoding, features, c);
  const auto& p = params_;
  const auto head = p.value("head.weight");
  Vec da2(hidden_);
  for (std::size_t i = 0; i < hidden_; ++i) da2[i] = scale_ * (head[i] + head[2 * hidden_ + i] * c.b2[i]);
  const Vec dz2 = relu_backward(c.za2, da2);
  const Vec da1 = input_grad(p.value("arch.l2.weight"), hidden_, dz2);
  const Vec dz1 = relu_backward(c.za1, da1);
  return {shift_ + scale_ * out, input_grad(p.value("arch.l1.weight"), enc_, dz1)};
}

Prediction MetaPredictor::evaluate(std::span<const double> encoding, const DeviceProfile& profile) const {
  return predict(encoding, profile.objective(objective_));
}

double MetaPredictor::accumulate_mse_gradient(std::span<const double> encoding, std::span<const double> features,
                                              double target, double weight) {
  if (frozen_) throw UsageError("predictor is frozen; its parameters cannot be modified");
  Cache c;
  const double out = run(encoding, features, c);
  auto& p = params_;
  const Vec up{2.0 * (out - target) * weight};
  const Vec djoint = linear_backward(c.joint, p.value("head.weight"), up, p.grad("head.weight"), p.grad("head.bias"));
  Vec ja(djoint.begin(), djoint.begin() + static_cast<std::ptrdiff_t>(hidden_));
  Vec jb(djoint.begin() + static_cast<std::ptrdiff_t>(hidden_), djoint.begin() + static_cast<std::ptrdiff_t>(2 * hidden_));
  for (std::size_t i = 0; i < hidden_; ++i) {
    ja[i] += djoint[2 * hidden_ + i] * c.b2[i];
    jb[i] += djoint[2 * hidden_ + i] * c.a2[i];
  }
  const Vec dza2 = relu_backward(c.za2, ja);
  const Vec da1 = linear_backward(c.a1, p.value("arch.l2.weight"), dza2, p.grad("arch.l2.weight"), p.grad("arch.l2.bias"));
  const Vec dza1 = relu_backward(c.za1, da1);
  linear_backward(c.x, p.value("arch.l1.weight"), dza1, p.grad("arch.l1.weight"), p.grad("arch.l1.bias"));
  const Vec dzb2 = relu_backward(c.zb2, jb);
  const Vec db1 = linear_backward(c.b1, p.value("dev.l2.weight"), dzb2, p.grad("dev.l2.weight"), p.grad("dev.l2.bias"));
  const Vec dzb1 = relu_backward(c.zb1, db1);
  linear_backward(c.d, p.value("dev.l1.weight"), dzb1, p.grad("dev.l1.weight"), p.grad("dev.l1.bias"));
  return out;
}

void MetaPredictor::save(const std::filesystem::path& path, const std::string& benchmark_hash) const {
  ParamStore copy = params_;
  auto& meta = copy.metadata();
  meta["kind"] = "metapredictor";
  meta["objective"] = std::to_string(objective_);
  meta["encoding_size"] = std::to_string(enc_);
  meta["feature_size"] = std::to_string(feat_);
  meta["hidden"] = std::to_string(hidden_);
  meta["target_shift"] = format_double(shift_);
  meta["target_scale"] = format_double(scale_);
  meta["trained"] = trained_ ? "1" : "0";
  meta["benchmark_hash"] = benchmark_hash;
  copy.save(path);
}

MetaPredictor MetaPredictor::load(const std::filesystem::path& path, const std::string& benchmark_hash) {
  ParamStore p = ParamStore::load(path);
  const auto kind = p.metadata().find("kind");
  if (kind == p.metadata().end() || kind->second != "metapredictor") {
    throw SchemaError("checkpoint is not a predictor: " + path.string());
  }
  if (!benchmark_hash.empty() && p.metadata()["benchmark_hash"] != benchmark_hash) {
    throw UsageError("predictor checkpoint was trained on a different benchmark: " + path.string());
  }
  MetaPredictor net(meta_size(p, "encoding_size"), meta_size(p, "feature_size"), meta_size(p, "objective"),
                    meta_size(p, "hidden"));
  for (const auto& b : net.params_.blocks()) {
    if (!p.contains(b.name) || p.block(b.name).shape != b.shape) {
      throw SchemaError("predictor checkpoint block '" + b.name + "' missing or misshapen");
    }
  }
  net.shift_ = std::stod(p.metadata().at("target_shift"));
  net.scale_ = std::stod(p.metadata().at("target_scale"));
  net.trained_ = p.metadata().at("trained") == "1";
  net.params_ = std::move(p);
  return net;
}

nlohmann::json PredictorReport::to_json() const {
  nlohmann::json taus_json = nlohmann::json::array();
  for (const auto& t : taus) {
    taus_json.push_back({{"device", t.device}, {"train", t.train}, {"kendall_tau", t.tau}, {"pairs", t.pairs}});
  }
  return {{"objective", objective},
          {"train_mse", train_mse},
          {"holdout_mse", holdout_mse},
          {"epochs", loss_history.size()},
          {"devices", taus_json}};
}

double predictor_target(const Benchmark& bench, std::size_t objective, std::size_t device, std::uint64_t config) {
  const auto& table = bench.table(objective, device);
  double ref_max = 0.0;
  for (auto c : bench.reference_configs) ref_max = std::max(ref_max, table.values.at(c));
  if (!(ref_max > 0.0)) throw BenchmarkError("reference architectures have non-positive cost");
  return table.values.at(config) / ref_max;
}

double kendall_tau(std::span<const double> a, std::span<const double> b) {
  check_size(b.size(), a.size(), "Kendall tau samples");
  long long concordant = 0, discordant = 0, ties_a = 0, ties_b = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      const double da = a[i] - a[j];
      const double db = b[i] - b[j];
      if (da == 0.0 && db == 0.0) continue;
      if (da == 0.0) {
        ++ties_a;
      } else if (db == 0.0) {
        ++ties_b;
      } else if ((da > 0) == (db > 0)) {
        ++concordant;
      } else {
        ++discordant;
      }
    }
  }
  const double n1 = static_cast<double>(concordant + discordant + ties_a);
  const double n2 = static_cast<double>(concordant + discordant + ties_b);
  if (n1 == 0.0 || n2 == 0.0) return 0.0;
  return static_cast<double>(concordant - discordant) / std::sqrt(n1 * n2);
}

PredictorReport train_predictor(MetaPredictor& net, const Benchmark& bench, const PredictorTrainOptions& options) {
  const std::size_t m = net.objective();
  if (m < 2 || m > bench.num_objectives()) throw ParameterError("objective outside the benchmark's hardware range");
  check_size(net.encoding_size(), bench.space.encoding_size(), "predictor encoding width");
  check_size(net.feature_size(), bench.recipe.profile_size, "predictor feature width");
  if (!(options.train_fraction > 0.0 && options.train_fraction <= 1.0)) {
    throw ParameterError("train fraction must lie in (0, 1]");
  }
  if (options.batch_size == 0 || options.epochs == 0) throw ParameterError("epochs and batch size must be positive");
  bench.space.require_enumerable();
  ParamStore& params = net.mutable_params();

  const auto train_devs = bench.train_devices();
  const std::uint64_t n_cfg = bench.space.total_configs();
  const std::uint64_t all_pairs = n_cfg * train_devs.size();
  const std::uint64_t total_pairs = options.sample_count == 0 ? all_pairs : options.sample_count;
  if (total_pairs > all_pairs) throw ParameterError("sample count exceeds configs x train devices");
  if (total_pairs < 2 * train_devs.size()) throw ParameterError("sample count too small for a per-device split");

  struct Sample {
    std::size_t device;
    std::uint64_t config;
    double target;
  };
  std::vector<Sample> train, holdout;
  Rng split_rng = Rng::substream(options.seed, {1});
  for (std::size_t i = 0; i < train_devs.size(); ++i) {
    const std::size_t dev = train_devs[i];
    std::vector<std::uint64_t> cfgs(n_cfg);
    std::iota(cfgs.begin(), cfgs.end(), 0);
    std::shuffle(cfgs.begin(), cfgs.end(), split_rng.engine());
    const std::uint64_t take = total_pairs / train_devs.size() + (i < total_pairs % train_devs.size() ? 1 : 0);
    cfgs.resize(take);
    auto n_train = static_cast<std::uint64_t>(std::llround(options.train_fraction * static_cast<double>(take)));
    n_train = std::clamp<std::uint64_t>(n_train, 1, take);
    for (std::uint64_t k = 0; k < take; ++k) {
      Sample s{dev, cfgs[k], predictor_target(bench, m, dev, cfgs[k])};
      if (k < n_train) train.push_back(s);
      if (k >= n_train || options.train_fraction >= 1.0) holdout.push_back(s);
    }
  }
  if (options.shuffle_labels) {
    Rng shuffle_rng = Rng::substream(options.seed, {2});
    Vec targets;
    for (const auto& s : train) targets.push_back(s.target);
    std::shuffle(targets.begin(), targets.end(), shuffle_rng.engine());
    for (std::size_t i = 0; i < train.size(); ++i) train[i].target = targets[i];
  }

  double mean = 0.0;
  for (const auto& s : train) mean += s.target;
  mean /= static_cast<double>(train.size());
  double var = 0.0;
  for (const auto& s : train) var += (s.target - mean) * (s.target - mean);
  const double sd = std::sqrt(var / static_cast<double>(train.size()));
  net.set_target_transform(mean, sd > 1e-12 ? sd : 1.0);

  std::vector<Vec> encodings(n_cfg);
  for (std::uint64_t c = 0; c < n_cfg; ++c) encodings[c] = bench.space.encode(bench.space.config_at(c));
  const auto features = [&](std::size_t dev) { return bench.profiles.at(dev).objective(m); };
  const auto standardized = [&](double y) { return (y - net.target_shift()) / net.target_scale(); };

  AdamOptions ao;
  ao.lr = options.lr;
  ao.weight_decay = options.weight_decay;
  Adam adam(params.num_params(), ao);
  Rng order_rng = Rng::substream(options.seed, {3});
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  PredictorReport report;
  report.objective = m;
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), order_rng.engine());
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
      const std::size_t end = std::min(order.size(), start + options.batch_size);
      const double inv = 1.0 / static_cast<double>(end - start);
      params.zero_grad();
      for (std::size_t k = start; k < end; ++k) {
        const auto& s = train[order[k]];
        const double target = standardized(s.target);
        const double out = net.accumulate_mse_gradient(encodings[s.config], features(s.device), target, inv);
        epoch_loss += (out - target) * (out - target);
      }
      const Vec g = params.flat_grads();
      if (!all_finite(g)) throw TrainingError("non-finite gradient while training the predictor");
      adam.step(params, g);
    }
    epoch_loss /= static_cast<double>(train.size());
    if (!std::isfinite(epoch_loss)) throw TrainingError("predictor training loss diverged");
    report.loss_history.push_back(epoch_loss);
  }
  net.mark_trained();

  const auto mse_of = [&](const std::vector<Sample>& set) {
    double acc = 0.0;
    for (const auto& s : set) {
      const double e = standardized(net.predict(encodings[s.config], features(s.device)).value) - standardized(s.target);
      acc += e * e;
    }
    return acc / static_cast<double>(set.size());
  };
  report.train_mse = mse_of(train);
  report.holdout_mse = mse_of(holdout);
  if (!std::isfinite(report.train_mse)) throw TrainingError("predictor produced non-finite outputs");

  for (const auto& dev : bench.devices) {
    Vec pred, truth;
    if (dev.train) {
      for (const auto& s : holdout) {
        if (s.device != dev.id) continue;
        pred.push_back(net.predict(encodings[s.config], features(dev.id)).value);
        truth.push_back(predictor_target(bench, m, dev.id, s.config));
      }
    } else {
      for (std::uint64_t c = 0; c < n_cfg; ++c) {
        pred.push_back(net.predict(encodings[c], features(dev.id)).value);
        truth.push_back(predictor_target(bench, m, dev.id, c));
      }
    }
    report.taus.push_back({dev.id, dev.train, kendall_tau(pred, truth), pred.size()});
  }
  return report;
}

Prediction ExactHardwareSurrogate::evaluate(std::span<const double> encoding, const DeviceProfile& profile) const {
  const auto r = multilinear_eval(bench_->space, bench_->table(objective_, profile.device).values, encoding);
  return {r.value, r.grad};
}

Prediction ExactAccuracySurrogate::evaluate(std::span<const double> encoding) const {
  const auto r = multilinear_eval(bench_->space, bench_->error_valid.values, encoding);
  return {r.value, r.grad};
}

MlpAccuracySurrogate::MlpAccuracySurrogate(std::size_t encoding_size, std::size_t hidden, std::uint64_t seed)
    : enc_(encoding_size), hidden_(hidden) {
  if (enc_ == 0 || hidden_ == 0) throw ParameterError("surrogate sizes must be positive");
  Rng rng(seed);
  he_init(params_.add("l1.weight", {hidden_, enc_}), enc_, rng);
  params_.add("l1.bias", {hidden_});
  auto& v = params_.add("l2.weight", {1, hidden_});
  for (double& x : v.value) x = rng.normal(0.0, 0.1 / std::sqrt(static_cast<double>(hidden_)));
  params_.add("l2.bias", {1});
}

Prediction MlpAccuracySurrogate::evaluate(std::span<const double> encoding) const {
  check_size(encoding.size(), enc_, "surrogate encoding");
  const Vec z = linear_forward(encoding, params_.value("l1.weight"), params_.value("l1.bias"));
  const Vec a = relu_forward(z);
  const double y = linear_forward(a, params_.value("l2.weight"), params_.value("l2.bias"))[0];
  const Vec dz = relu_backward(z, params_.value("l2.weight"));
  return {y, input_grad(params_.value("l1.weight"), enc_, dz)};
}

Vec MlpAccuracySurrogate::loss_gradient(std::span<const double> encoding, double target) const {
  check_size(encoding.size(), enc_, "surrogate encoding");
  ParamStore scratch = params_;
  scratch.zero_grad();
  const Vec z = linear_forward(encoding, scratch.value("l1.weight"), scratch.value("l1.bias"));
  const Vec a = relu_forward(z);
  const double y = linear_forward(a, scratch.value("l2.weight"), scratch.value("l2.bias"))[0];
  const Vec up{2.0 * (y - target)};
  const Vec da = linear_backward(a, scratch.value("l2.weight"), up, scratch.grad("l2.weight"), scratch.grad("l2.bias"));
  const Vec dz = relu_backward(z, da);
  linear_backward(encoding, scratch.value("l1.weight"), dz, scratch.grad("l1.weight"), scratch.grad("l1.bias"));
  return scratch.flat_grads();
}

}  // namespace modnas
