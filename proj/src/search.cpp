#include "modnas/search.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "modnas/adam.hpp"
#include "modnas/errors.hpp"
#include "modnas/front_io.hpp"
#include "modnas/pareto.hpp"

namespace modnas {

namespace {

// Base seeds of the independent random streams of a search.
constexpr std::uint64_t kPrefStream = 0x51;
constexpr std::uint64_t kArchStream = 0x52;
constexpr std::uint64_t kDeviceStream = 0x53;
constexpr std::uint64_t kLowerStream = 0x54;
constexpr std::uint64_t kNormStream = 0x55;

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  return seed * 0x9E3779B97F4A7C15ULL + stream;
}

std::vector<std::uint64_t> stat_configs(const ArchSpace& space, std::size_t samples, std::uint64_t seed) {
  std::vector<std::uint64_t> cfgs;
  const std::uint64_t total = space.total_configs();
  if (samples >= total) {
    cfgs.resize(total);
    std::iota(cfgs.begin(), cfgs.end(), 0);
    return cfgs;
  }
  Rng rng(seed);
  for (std::size_t i = 0; i < samples; ++i) cfgs.push_back(rng.below(total));
  return cfgs;
}

struct LossEval {
  double loss = 0.0;
  Vec losses;
  Vec raw;
  Vec dx;  // d loss / d encoding
  std::vector<bool> active;
};

// With `fixed_active` set, gated objectives take the values in `frozen`
// instead of being recomputed, which makes their derivative exactly zero.
LossEval evaluate_losses(const ObjectiveModels& models, const NormState& norm, const SearchConfig& config,
                         std::size_t device, const PreferenceVector& r, std::span<const double> x,
                         const std::vector<bool>* fixed_active, const Vec* frozen) {
  const Benchmark& bench = *models.bench;
  const std::size_t M = bench.num_objectives();
  check_size(r.size(), M, "preference vector");
  LossEval out;
  out.losses.resize(M);
  out.raw.resize(M);
  std::vector<Vec> grads(M);
  Vec slopes(M);

  const Prediction acc = models.accuracy->evaluate(x);
  const Normalized n1 = normalize_objective(acc.value, norm.accuracy);
  out.raw[0] = acc.value;
  out.losses[0] = n1.value;
  slopes[0] = n1.slope;
  grads[0] = acc.grad;
  const DeviceProfile& profile = bench.profiles.at(device);
  for (std::size_t m = 2; m <= M; ++m) {
    const Prediction p = models.hardware.at(m - 2)->evaluate(x, profile);
    const Normalized nm = normalize_objective(p.value, norm.hardware.at(device).at(m - 2));
    out.raw[m - 1] = p.value;
    out.losses[m - 1] = nm.value;
    slopes[m - 1] = nm.slope;
    grads[m - 1] = p.grad;
  }
  out.active = fixed_active ? *fixed_active : gate_constrained_gradient(out.losses, config.constraints);
  if (frozen) {
    // gated objectives keep their value at the one-hot sample
    for (std::size_t m = 0; m < M; ++m) {
      if (!out.active[m]) out.losses[m] = (*frozen)[m];
    }
  }

  const CosinePenalty cp = cosine_penalty(r, out.losses);
  out.loss = scalarize(r, out.losses) - config.lambda * cp.value;
  out.dx.assign(x.size(), 0.0);
  for (std::size_t m = 0; m < M; ++m) {
    if (!out.active[m]) continue;
    const double dl = r[m] - config.lambda * cp.grad[m];
    if (dl != 0.0 && slopes[m] != 0.0) axpy(dl * slopes[m], grads[m], out.dx);
  }
  return out;
}

}  // namespace

UpdateScheme parse_scheme(const std::string& name) {
  if (name == "mgd") return UpdateScheme::mgd;
  if (name == "mean") return UpdateScheme::mean;
  if (name == "sequential") return UpdateScheme::sequential;
  if (name == "mc") return UpdateScheme::mc;
  throw ParameterError("unknown update scheme '" + name + "' (expected mgd, mean, sequential or mc)");
}

std::string to_string(UpdateScheme s) {
  switch (s) {
    case UpdateScheme::mgd: return "mgd";
    case UpdateScheme::mean: return "mean";
    case UpdateScheme::sequential: return "sequential";
    case UpdateScheme::mc: return "mc";
  }
  return "mgd";
}

SurrogateMode parse_surrogate(const std::string& name) {
  if (name == "frozen") return SurrogateMode::frozen;
  if (name == "trainable") return SurrogateMode::trainable;
  throw ParameterError("unknown surrogate mode '" + name + "' (expected frozen or trainable)");
}

std::string to_string(SurrogateMode s) { return s == SurrogateMode::frozen ? "frozen" : "trainable"; }

BaselineKind parse_baseline(const std::string& name) {
  if (name == "rs") return BaselineKind::rs;
  if (name == "rhpn") return BaselineKind::rhpn;
  throw ParameterError("unknown baseline '" + name + "' (expected rs or rhpn)");
}

void SearchConfig::resolve(std::size_t num_objectives) {
  if (beta.empty()) beta.assign(num_objectives, 1.0);
  if (constraints.empty()) constraints.assign(num_objectives - 1, 0.0);
  check_size(beta.size(), num_objectives, "Dirichlet concentrations");
  check_size(constraints.size(), num_objectives - 1, "constraint vector");
  for (double b : beta) {
    if (!(b > 0.0)) throw ParameterError("Dirichlet concentrations must be positive");
  }
  for (double c : constraints) {
    if (!(c >= 0.0 && c <= 1.0)) throw ParameterError("constraints must lie in [0, 1]");
  }
  if (!(lr_hypernet >= 0.0) || !(lr_surrogate >= 0.0)) throw ParameterError("learning rates must be non-negative");
  if (!(tau > 0.0)) throw ParameterError("temperature must be positive");
  if (!(lambda >= 0.0)) throw ParameterError("cosine penalty weight must be non-negative");
  if (epochs == 0 || steps_per_epoch == 0) throw ParameterError("epochs and steps per epoch must be positive");
  if (profile_count < 2) throw ParameterError("profile count must be at least 2");
  if (norm_samples == 0) throw ParameterError("normalization sample count must be positive");
}

nlohmann::json SearchConfig::to_json() const {
  return {{"epochs", epochs},
          {"steps_per_epoch", steps_per_epoch},
          {"lr_hypernet", lr_hypernet},
          {"lr_surrogate", lr_surrogate},
          {"weight_decay", weight_decay},
          {"beta", beta},
          {"lambda", lambda},
          {"estimator", to_string(estimator)},
          {"tau", tau},
          {"scheme", to_string(scheme)},
          {"constraints", constraints},
          {"surrogate", to_string(surrogate)},
          {"seed", seed},
          {"norm_samples", norm_samples},
          {"profile_count", profile_count},
          {"fw_max_iters", frank_wolfe.max_iters},
          {"fw_tol", frank_wolfe.tol},
          {"bank_size", hypernet.bank_size},
          {"bins", hypernet.bins},
          {"init_std", hypernet.init_std},
          {"pretrain_lr", pretrain.lr},
          {"pretrain_epochs", pretrain.epochs},
          {"trace_hv", trace_hv}};
}

SearchConfig SearchConfig::from_json(const nlohmann::json& doc) {
  SearchConfig c;
  c.epochs = doc.value("epochs", c.epochs);
  c.steps_per_epoch = doc.value("steps_per_epoch", c.steps_per_epoch);
  c.lr_hypernet = doc.value("lr_hypernet", c.lr_hypernet);
  c.lr_surrogate = doc.value("lr_surrogate", c.lr_surrogate);
  c.weight_decay = doc.value("weight_decay", c.weight_decay);
  c.beta = doc.value("beta", c.beta);
  c.lambda = doc.value("lambda", c.lambda);
  c.estimator = parse_estimator(doc.value("estimator", to_string(c.estimator)));
  c.tau = doc.value("tau", c.tau);
  c.scheme = parse_scheme(doc.value("scheme", to_string(c.scheme)));
  c.constraints = doc.value("constraints", c.constraints);
  c.surrogate = parse_surrogate(doc.value("surrogate", to_string(c.surrogate)));
  c.seed = doc.value("seed", c.seed);
  c.norm_samples = doc.value("norm_samples", c.norm_samples);
  c.profile_count = doc.value("profile_count", c.profile_count);
  c.frank_wolfe.max_iters = doc.value("fw_max_iters", c.frank_wolfe.max_iters);
  c.frank_wolfe.tol = doc.value("fw_tol", c.frank_wolfe.tol);
  c.hypernet.bank_size = doc.value("bank_size", c.hypernet.bank_size);
  c.hypernet.bins = doc.value("bins", c.hypernet.bins);
  c.hypernet.init_std = doc.value("init_std", c.hypernet.init_std);
  c.pretrain.lr = doc.value("pretrain_lr", c.pretrain.lr);
  c.pretrain.epochs = doc.value("pretrain_epochs", c.pretrain.epochs);
  c.trace_hv = doc.value("trace_hv", c.trace_hv);
  return c;
}

NormState initial_norm_state(const ObjectiveModels& models, std::size_t samples, std::uint64_t seed) {
  const Benchmark& bench = *models.bench;
  NormState state;
  const auto cfgs = stat_configs(bench.space, samples, seed);
  std::vector<Vec> enc;
  for (auto c : cfgs) enc.push_back(bench.space.encode(bench.space.config_at(c)));
  state.hardware.resize(bench.devices.size());
  for (const auto& dev : bench.devices) {
    auto& per = state.hardware[dev.id];
    per.resize(bench.num_objectives() - 1);
    for (std::size_t m = 2; m <= bench.num_objectives(); ++m) {
      for (const auto& x : enc) per[m - 2].add(models.hardware.at(m - 2)->evaluate(x, bench.profiles.at(dev.id)).value);
    }
  }
  reseed_accuracy_stats(state, models, samples, seed);
  return state;
}

void reseed_accuracy_stats(NormState& state, const ObjectiveModels& models, std::size_t samples, std::uint64_t seed) {
  const ArchSpace& space = models.bench->space;
  state.accuracy.reset();
  for (auto c : stat_configs(space, samples, seed)) {
    state.accuracy.add(models.accuracy->evaluate(space.encode(space.config_at(c))).value);
  }
}

DeviceGradient device_gradient(MetaHypernetwork& net, const ObjectiveModels& models, const NormState& norm,
                               const SearchConfig& config, std::size_t device, const PreferenceVector& r,
                               const ArchSample& sample) {
  const Benchmark& bench = *models.bench;
  const auto fwd = net.forward(r, bench.profiles.at(device).features);
  const LossEval ev = evaluate_losses(models, norm, config, device, r, sample.forward, nullptr, nullptr);
  const Vec dlogits = sample.backward(bench.space, ev.dx);
  net.params().zero_grad();
  net.backward(fwd, dlogits);
  DeviceGradient out;
  out.grad = net.params().flat_grads();
  if (!all_finite(out.grad)) throw NumericError("non-finite device gradient on device " + std::to_string(device));
  out.loss = ev.loss;
  out.losses = ev.losses;
  out.raw = ev.raw;
  out.active = ev.active;
  out.config = sample.config;
  return out;
}

DeviceGradient device_gradient(MetaHypernetwork& net, const ObjectiveModels& models, const NormState& norm,
                               const SearchConfig& config, std::size_t device, const PreferenceVector& r,
                               std::uint64_t seed, std::uint64_t step) {
  const Benchmark& bench = *models.bench;
  const Vec logits = net.logits(r, bench.profiles.at(device).features);
  const ArchSample sample = sample_architecture(bench.space, logits, config.estimator, config.tau,
                                                mix_seed(seed, kArchStream), step, device);
  return device_gradient(net, models, norm, config, device, r, sample);
}

double device_loss_frozen_sample(const MetaHypernetwork& net, const ObjectiveModels& models, const NormState& norm,
                                 const SearchConfig& config, std::size_t device, const PreferenceVector& r,
                                 const ArchSample& sample, const std::vector<bool>& active) {
  const Benchmark& bench = *models.bench;
  const LossEval base = evaluate_losses(models, norm, config, device, r, sample.forward, &active, nullptr);
  const Vec logits = net.logits(r, bench.profiles.at(device).features);
  const Vec x = sample.relaxed_value(bench.space, logits);
  return evaluate_losses(models, norm, config, device, r, x, &active, &base.losses).loss;
}

ProfileResult profile_pareto(const MetaHypernetwork& net, const Benchmark& bench, std::size_t device,
                             std::size_t count) {
  const std::size_t M = bench.num_objectives();
  ProfileResult out;
  out.device = device;
  out.preferences = equidistant_preferences(M, count);
  const auto& features = bench.profiles.at(device).features;
  std::vector<FrontPoint> pts;
  for (const auto& r : out.preferences) {
    const Vec logits = net.logits(r, features);
    const std::uint64_t arch = bench.space.index_of(bench.space.decode(logits));
    out.archs.push_back(arch);
    out.points.push_back(bench.normalized_objectives(device, arch));
    pts.push_back({out.points.back(), static_cast<std::int64_t>(arch)});
  }
  std::vector<std::uint64_t> uniq = out.archs;
  std::sort(uniq.begin(), uniq.end());
  out.unique_archs = static_cast<std::size_t>(std::unique(uniq.begin(), uniq.end()) - uniq.begin());
  out.front = nondominated_filter(std::move(pts));
  out.hv = hypervolume(out.front, Vec(M, 1.0));
  return out;
}

ProfileResult run_baseline(BaselineKind kind, const Benchmark& bench, std::size_t device, std::size_t count,
                           std::uint64_t seed, const HypernetOptions& hypernet) {
  bench.device(device);
  if (kind == BaselineKind::rhpn) {
    HypernetOptions opts = hypernet;
    opts.seed = seed;
    const std::size_t M = bench.num_objectives();
    MetaHypernetwork net(bench.space, M, bench.recipe.profile_size * (M - 1), opts);
    return profile_pareto(net, bench, device, count);
  }
  const std::uint64_t total = bench.space.total_configs();
  std::vector<std::uint64_t> all(total);
  std::iota(all.begin(), all.end(), 0);
  Rng rng(seed);
  const std::uint64_t take = std::min<std::uint64_t>(count, total);
  // partial Fisher-Yates: the first `take` entries are a uniform sample without replacement
  for (std::uint64_t i = 0; i < take; ++i) std::swap(all[i], all[i + rng.below(total - i)]);
  ProfileResult out;
  out.device = device;
  std::vector<FrontPoint> pts;
  for (std::uint64_t i = 0; i < take; ++i) {
    out.archs.push_back(all[i]);
    out.points.push_back(bench.normalized_objectives(device, all[i]));
    pts.push_back({out.points.back(), static_cast<std::int64_t>(all[i])});
  }
  out.unique_archs = static_cast<std::size_t>(take);
  out.front = nondominated_filter(std::move(pts));
  out.hv = hypervolume(out.front, Vec(bench.num_objectives(), 1.0));
  return out;
}

std::string SearchTrace::to_jsonl() const {
  std::ostringstream os;
  for (const auto& r : records) {
    nlohmann::json j{{"epoch", r.epoch}, {"device", r.device}, {"train", r.train}, {"hv", r.hv}};
    if (std::isfinite(r.mean_loss)) {
      j["loss"] = r.mean_loss;
      j["losses"] = r.mean_losses;
    }
    if (!r.mean_gamma.empty()) j["gamma"] = r.mean_gamma;
    os << j.dump() << '\n';
  }
  return os.str();
}

double SearchTrace::final_mean_hv(const std::vector<std::size_t>& devices) const {
  if (records.empty() || devices.empty()) return 0.0;
  const std::size_t last = records.back().epoch;
  double acc = 0.0;
  std::size_t n = 0;
  for (const auto& r : records) {
    if (r.epoch == last && std::find(devices.begin(), devices.end(), r.device) != devices.end()) {
      acc += r.hv;
      ++n;
    }
  }
  return n ? acc / static_cast<double>(n) : 0.0;
}

MetaHypernetwork make_pretrained_hypernet(const Benchmark& bench, const SearchConfig& config,
                                          PretrainReport* report) {
  const std::size_t M = bench.num_objectives();
  HypernetOptions opts = config.hypernet;
  opts.seed = mix_seed(config.seed, 0x60);
  MetaHypernetwork net(bench.space, M, bench.recipe.profile_size * (M - 1), opts);
  std::vector<Vec> pool;
  for (auto d : bench.train_devices()) pool.push_back(bench.profiles.at(d).features);
  PretrainOptions po = config.pretrain;
  po.seed = mix_seed(config.seed, 0x61);
  const PretrainReport rep = pretrain_uniform(net, pool, po);
  if (report) *report = rep;
  return net;
}

SearchResult search(const SearchConfig& cfg_in, const Benchmark& bench, MetaHypernetwork initial,
                    const std::vector<const HardwareSurrogate*>& hardware) {
  SearchConfig config = cfg_in;
  const std::size_t M = bench.num_objectives();
  config.resolve(M);
  check_size(hardware.size(), M - 1, "hardware surrogates");
  if (!(initial.space() == bench.space) || initial.num_objectives() != M) {
    throw UsageError("hypernetwork does not match the benchmark");
  }
  bench.space.require_enumerable();

  SearchResult result;
  result.net = std::move(initial);
  MetaHypernetwork& net = result.net;

  ExactAccuracySurrogate exact_acc(bench);
  if (config.surrogate == SurrogateMode::trainable) {
    result.surrogate = std::make_unique<MlpAccuracySurrogate>(bench.space.encoding_size(), 32,
                                                              mix_seed(config.seed, 0x62));
  }
  ObjectiveModels models;
  models.bench = &bench;
  models.accuracy = result.surrogate ? static_cast<const AccuracySurrogate*>(result.surrogate.get()) : &exact_acc;
  models.hardware = hardware;

  const std::uint64_t norm_seed = mix_seed(config.seed, kNormStream);
  NormState norm = initial_norm_state(models, config.norm_samples, norm_seed);

  AdamOptions ao;
  ao.lr = config.lr_hypernet;
  ao.weight_decay = config.weight_decay;
  ao.decoupled = true;
  Adam adam(net.params().num_params(), ao);
  const DirichletParams dir{config.beta};
  const auto train_devs = bench.train_devices();
  const std::size_t T = train_devs.size();
  const std::uint64_t pref_seed = mix_seed(config.seed, kPrefStream);

  const auto draw_pref = [&](std::uint64_t step, std::uint64_t device) {
    Rng rng = Rng::substream(pref_seed, {step, device});
    return sample_preference(dir, rng);
  };
  const auto check_params = [&](std::size_t epoch, std::uint64_t step) {
    const auto& blocks = net.params().blocks();
    if (!std::all_of(blocks.begin(), blocks.end(), [](const ParamBlock& b) { return all_finite(b.value); })) {
      throw NumericError("non-finite hypernetwork parameters at epoch " + std::to_string(epoch) + ", step " +
                         std::to_string(step) + " (scheme " + to_string(config.scheme) + ")");
    }
  };

  std::uint64_t step = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    if (epoch > 0) reseed_accuracy_stats(norm, models, config.norm_samples, norm_seed + epoch);
    std::vector<Vec> loss_sum(bench.devices.size(), Vec(M, 0.0));
    Vec scal_sum(bench.devices.size(), 0.0);
    std::vector<std::size_t> visits(bench.devices.size(), 0);
    Vec gamma_sum(T, 0.0);
    std::size_t gamma_count = 0;
    const auto record = [&](std::size_t dev, const DeviceGradient& g) {
      axpy(1.0, g.losses, loss_sum[dev]);
      scal_sum[dev] += g.loss;
      ++visits[dev];
      norm.accuracy.add(g.raw[0]);
    };

    for (std::size_t s = 0; s < config.steps_per_epoch; ++s, ++step) {
      switch (config.scheme) {
        case UpdateScheme::mgd:
        case UpdateScheme::mean: {
          std::vector<DeviceGradient> grads;
          for (auto dev : train_devs) {
            grads.push_back(device_gradient(net, models, norm, config, dev, draw_pref(step, dev), config.seed, step));
          }
          std::vector<Vec> gs;
          for (auto& g : grads) gs.push_back(std::move(g.grad));
          Vec gamma(T, 1.0 / static_cast<double>(T));
          if (config.scheme == UpdateScheme::mgd) {
            gamma = frank_wolfe_gamma(gs, config.frank_wolfe).gamma;
            result.trace.gammas.push_back(gamma);
            axpy(1.0, gamma, gamma_sum);
            ++gamma_count;
          }
          adam.step(net.params(), mgd_direction(gs, gamma));
          for (std::size_t i = 0; i < T; ++i) record(train_devs[i], grads[i]);
          break;
        }
        case UpdateScheme::sequential: {
          for (auto dev : train_devs) {
            const auto g = device_gradient(net, models, norm, config, dev, draw_pref(step, dev), config.seed, step);
            adam.step(net.params(), g.grad);
            record(dev, g);
          }
          break;
        }
        case UpdateScheme::mc: {
          Rng pick = Rng::substream(mix_seed(config.seed, kDeviceStream), {step});
          const std::size_t dev = train_devs[pick.below(T)];
          const auto g = device_gradient(net, models, norm, config, dev, draw_pref(step, dev), config.seed, step);
          adam.step(net.params(), g.grad);
          record(dev, g);
          break;
        }
      }
      check_params(epoch, step);

      if (result.surrogate) {
        // lower level: mean over devices of r_1 * grad_w (f_w(alpha) - y_train(alpha))^2
        Vec gw(result.surrogate->params().num_params(), 0.0);
        for (auto dev : train_devs) {
          Rng rng = Rng::substream(mix_seed(config.seed, kLowerStream), {step, dev});
          const auto r = sample_preference(dir, rng);
          const Vec logits = net.logits(r, bench.profiles.at(dev).features);
          const auto a = sample_architecture(bench.space, logits, config.estimator, config.tau, rng);
          const double y = bench.error_train.values.at(bench.space.index_of(a.config));
          axpy(r[0] / static_cast<double>(T), result.surrogate->loss_gradient(a.forward, y), gw);
        }
        if (!all_finite(gw)) throw NumericError("non-finite surrogate gradient at step " + std::to_string(step));
        sgd_step(result.surrogate->params(), gw, config.lr_surrogate);
      }
    }

    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.trace.epoch_seconds.push_back(secs);
    Vec mean_gamma;
    if (gamma_count) mean_gamma = scaled(gamma_sum, 1.0 / static_cast<double>(gamma_count));
    for (const auto& dev : bench.devices) {
      TraceRecord rec;
      rec.epoch = epoch + 1;
      rec.device = dev.id;
      rec.train = dev.train;
      rec.hv = config.trace_hv || epoch + 1 == config.epochs
                   ? profile_pareto(net, bench, dev.id, config.profile_count).hv
                   : std::numeric_limits<double>::quiet_NaN();
      rec.mean_loss = std::numeric_limits<double>::quiet_NaN();
      if (visits[dev.id]) {
        const double inv = 1.0 / static_cast<double>(visits[dev.id]);
        rec.mean_loss = scal_sum[dev.id] * inv;
        rec.mean_losses = scaled(loss_sum[dev.id], inv);
      }
      if (dev.train) rec.mean_gamma = mean_gamma;
      result.trace.records.push_back(std::move(rec));
    }
  }
  return result;
}

std::string profile_csv(const ProfileResult& profile, const Benchmark& bench) {
  const std::size_t M = bench.num_objectives();
  std::ostringstream os;
  if (!profile.preferences.empty()) {
    for (std::size_t m = 0; m < M; ++m) os << "r" << m + 1 << ',';
  }
  os << "arch,config";
  for (std::size_t m = 0; m < M; ++m) os << ",obj" << m + 1;
  for (std::size_t m = 0; m < M; ++m) os << ",raw" << m + 1;
  os << '\n';
  for (std::size_t i = 0; i < profile.archs.size(); ++i) {
    if (!profile.preferences.empty()) {
      for (std::size_t m = 0; m < M; ++m) os << format_double(profile.preferences[i][m]) << ',';
    }
    const auto cfg = bench.space.config_at(profile.archs[i]);
    os << profile.archs[i] << ',';
    for (std::size_t d = 0; d < cfg.choices.size(); ++d) os << (d ? "-" : "") << cfg.choices[d];
    for (double v : profile.points[i]) os << ',' << format_double(v);
    for (double v : bench.objectives(profile.device, profile.archs[i])) os << ',' << format_double(v);
    os << '\n';
  }
  return os.str();
}

}  // namespace modnas
