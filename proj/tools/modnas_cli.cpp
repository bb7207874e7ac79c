// modnas: command-line driver for the benchmark, predictor, search and
// evaluation pipeline. Every command writes into an --out directory that
// ends up holding its artifacts plus one manifest.json.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "config_file.hpp"
#include "modnas/errors.hpp"
#include "modnas/experiment.hpp"
#include "modnas/front_io.hpp"
#include "modnas/hash.hpp"
#include "modnas/pareto.hpp"
#include "modnas/param_store.hpp"

#ifndef MODNAS_VERSION
#define MODNAS_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace modnas;

namespace {

// Collects the files a command writes. Unless commit() runs, the destructor
// deletes them again so a failed command leaves no partial results.
class OutputDir {
 public:
  explicit OutputDir(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }
  OutputDir(const OutputDir&) = delete;
  OutputDir& operator=(const OutputDir&) = delete;

  ~OutputDir() {
    if (committed_) return;
    std::error_code ec;
    for (const auto& name : files_) fs::remove(dir_ / name, ec);
  }

  fs::path claim(const std::string& name) {
    files_.push_back(name);
    return dir_ / name;
  }

  void write(const std::string& name, const std::string& text) { write_text_atomic(claim(name), text); }

  void commit(json manifest) {
    json artifacts = json::object();
    for (const auto& name : files_) artifacts[name] = sha256_file(dir_ / name);
    manifest["artifacts"] = artifacts;
    write_text_atomic(dir_ / "manifest.json", manifest.dump(2) + "\n");
    committed_ = true;
  }

 private:
  fs::path dir_;
  std::vector<std::string> files_;
  bool committed_ = false;
};

json manifest_for(const std::string& command, json config, const std::vector<std::uint64_t>& seeds,
                  const std::map<std::string, fs::path>& inputs) {
  json in = json::object();
  for (const auto& [flag, path] : inputs) in[flag] = {{"path", path.string()}, {"sha256", sha256_file(path)}};
  return {{"command", command},
          {"config", std::move(config)},
          {"seeds", seeds},
          {"inputs", in},
          {"versions", {{"modnas", MODNAS_VERSION}, {"benchmark_schema", Benchmark::kSchemaVersion}}}};
}

// Flags shared by search and ablate; each one overrides the config file.
struct SearchFlags {
  std::string config;
  std::vector<std::string> predictors;
  bool exact_hardware = false;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> epochs, steps, profile_count, bins;
  std::optional<double> lr, tau, lambda, weight_decay;
  std::optional<std::string> scheme, estimator, surrogate;
  std::vector<double> constraints;

  void add_to(CLI::App* app, bool single_run) {
    app->add_option("--config", config, "INI file; flags given here take precedence")->check(CLI::ExistingFile);
    app->add_option("--predictor", predictors, "Predictor checkpoint, one per hardware objective")
        ->check(CLI::ExistingFile);
    app->add_flag("--exact-hardware", exact_hardware, "Use the exact hardware tables instead of predictors");
    app->add_option("--epochs", epochs);
    app->add_option("--steps", steps, "Steps per epoch");
    app->add_option("--lr", lr, "Hypernetwork learning rate");
    app->add_option("--tau", tau, "Estimator temperature");
    app->add_option("--lambda", lambda, "Cosine penalty weight");
    app->add_option("--weight-decay", weight_decay);
    app->add_option("--bins", bins, "Embedding rows per hardware objective");
    app->add_option("--profile-count", profile_count, "Preferences per profiled front");
    app->add_option("--scheme", scheme)->check(CLI::IsMember({"mgd", "mean", "sequential", "mc"}));
    app->add_option("--estimator", estimator)->check(CLI::IsMember({"reinmax", "gumbel_st"}));
    app->add_option("--surrogate", surrogate)->check(CLI::IsMember({"frozen", "trainable"}));
    if (single_run) {
      app->add_option("--seed", seed, "Search seed");
      app->add_option("--constraints", constraints, "c^m for m = 2..M")->delimiter(',');
    }
  }

  ExperimentConfig resolve() const {
    ExperimentConfig cfg = config.empty() ? paper_mini() : cli::load_config(config, paper_mini());
    SearchConfig& s = cfg.search;
    if (seed) {
      s.seed = *seed;
      cfg.seeds = {*seed};
    }
    if (epochs) s.epochs = *epochs;
    if (steps) s.steps_per_epoch = *steps;
    if (lr) s.lr_hypernet = *lr;
    if (tau) s.tau = *tau;
    if (lambda) s.lambda = *lambda;
    if (weight_decay) s.weight_decay = *weight_decay;
    if (bins) s.hypernet.bins = *bins;
    if (profile_count) s.profile_count = *profile_count;
    if (scheme) s.scheme = parse_scheme(*scheme);
    if (estimator) s.estimator = parse_estimator(*estimator);
    if (surrogate) s.surrogate = parse_surrogate(*surrogate);
    if (!constraints.empty()) s.constraints = constraints;
    if (exact_hardware) cfg.exact_hardware = true;
    return cfg;
  }
};

HardwareModels load_hardware(const Benchmark& bench, const ExperimentConfig& cfg,
                             const std::vector<std::string>& paths) {
  if (cfg.exact_hardware) {
    if (!paths.empty()) throw UsageError("--predictor and --exact-hardware are mutually exclusive");
    return exact_hardware_models(bench);
  }
  if (paths.empty()) throw UsageError("--predictor is required unless --exact-hardware is given");
  std::vector<std::unique_ptr<MetaPredictor>> loaded;
  const std::string hash = bench.content_hash();
  for (const auto& p : paths) loaded.push_back(std::make_unique<MetaPredictor>(MetaPredictor::load(p, hash)));
  std::sort(loaded.begin(), loaded.end(), [](const auto& a, const auto& b) { return a->objective() < b->objective(); });
  if (loaded.size() != bench.num_objectives() - 1) {
    throw UsageError("--predictor: expected " + std::to_string(bench.num_objectives() - 1) +
                     " checkpoints, one per hardware objective");
  }
  HardwareModels out;
  for (std::size_t i = 0; i < loaded.size(); ++i) {
    if (loaded[i]->objective() != i + 2) throw UsageError("--predictor: objectives must be 2..M, each once");
    if (loaded[i]->feature_size() != bench.recipe.profile_size)
      throw UsageError("--predictor: feature size does not match the benchmark");
    out.models.push_back(std::move(loaded[i]));
  }
  return out;
}

std::vector<std::size_t> pick_devices(const Benchmark& bench, const std::vector<std::size_t>& requested) {
  if (requested.empty()) {
    std::vector<std::size_t> all;
    for (const auto& d : bench.devices) all.push_back(d.id);
    return all;
  }
  for (auto d : requested) {
    if (d >= bench.devices.size()) throw UsageError("--device " + std::to_string(d) + " is out of range");
  }
  return requested;
}

void write_profile(OutputDir& out, const ProfileResult& p, const Benchmark& bench) {
  const std::string tag = "device" + std::to_string(p.device);
  out.write("profile_" + tag + ".csv", profile_csv(p, bench));
  write_front_csv(out.claim("front_" + tag + ".csv"), p.front.values());
}

json profile_summary(const std::vector<ProfileResult>& profiles, const Benchmark& bench) {
  json rows = json::array();
  for (const auto& p : profiles) {
    rows.push_back({{"device", p.device},
                    {"train", bench.device(p.device).train},
                    {"hv", p.hv},
                    {"front_size", p.front.size()},
                    {"unique_archs", p.unique_archs}});
  }
  return rows;
}

// --- commands -------------------------------------------------------------

struct GenBenchArgs {
  std::string out, config;
  std::optional<std::uint64_t> seed;
  std::vector<std::size_t> choices;
  std::optional<std::size_t> objectives, devices, train_devices, profile_size;
  std::optional<double> heterogeneity, conflict, noise, interaction;
};

int cmd_gen_bench(const GenBenchArgs& a) {
  ExperimentConfig cfg = a.config.empty() ? paper_mini() : cli::load_config(a.config, paper_mini());
  BenchmarkRecipe& r = cfg.recipe;
  if (a.seed) r.seed = *a.seed;
  if (!a.choices.empty()) r.choices = a.choices;
  if (a.objectives) r.num_objectives = *a.objectives;
  if (a.devices) r.num_devices = *a.devices;
  if (a.train_devices) r.num_train_devices = *a.train_devices;
  if (a.profile_size) r.profile_size = *a.profile_size;
  if (a.heterogeneity) r.heterogeneity = *a.heterogeneity;
  if (a.conflict) r.conflict = *a.conflict;
  if (a.noise) r.noise = *a.noise;
  if (a.interaction) r.interaction = *a.interaction;

  const Benchmark bench = generate_benchmark(r);
  OutputDir out(a.out);
  bench.save(out.claim("benchmark.json"));
  std::map<std::string, fs::path> inputs;
  if (!a.config.empty()) inputs["--config"] = a.config;
  out.commit(manifest_for("gen-bench", r.to_json(), {r.seed}, inputs));
  std::cout << "benchmark " << bench.content_hash() << " (" << bench.space.total_configs() << " configurations, "
            << bench.devices.size() << " devices)\n";
  return 0;
}

struct TrainPredictorArgs {
  std::string bench, out, config;
  std::vector<std::size_t> objectives;
  std::optional<std::size_t> epochs, samples, hidden;
  std::optional<double> lr, train_fraction;
  std::optional<std::uint64_t> seed;
  bool shuffle_labels = false;
};

int cmd_train_predictor(const TrainPredictorArgs& a) {
  ExperimentConfig cfg = a.config.empty() ? paper_mini() : cli::load_config(a.config, paper_mini());
  PredictorTrainOptions& o = cfg.predictor;
  if (a.epochs) o.epochs = *a.epochs;
  if (a.samples) o.sample_count = *a.samples;
  if (a.hidden) cfg.predictor_hidden = *a.hidden;
  if (a.lr) o.lr = *a.lr;
  if (a.train_fraction) o.train_fraction = *a.train_fraction;
  if (a.seed) o.seed = *a.seed;
  o.shuffle_labels = a.shuffle_labels;

  const Benchmark bench = Benchmark::load(a.bench);
  std::vector<std::size_t> objectives = a.objectives;
  if (objectives.empty()) {
    for (std::size_t m = 2; m <= bench.num_objectives(); ++m) objectives.push_back(m);
  }
  OutputDir out(a.out);
  json reports = json::array();
  for (auto m : objectives) {
    if (m < 2 || m > bench.num_objectives()) {
      throw UsageError("--objective " + std::to_string(m) + " is not a hardware objective of this benchmark");
    }
    MetaPredictor net(bench.space.encoding_size(), bench.recipe.profile_size, m, cfg.predictor_hidden, o.seed + m);
    const PredictorReport rep = train_predictor(net, bench, o);
    net.freeze();
    const std::string tag = "predictor_obj" + std::to_string(m);
    net.save(out.claim(tag + ".json"), bench.content_hash());
    out.write(tag + "_report.json", rep.to_json().dump(2) + "\n");
    reports.push_back(rep.to_json());
    std::cout << "objective " << m << ": holdout mse " << rep.holdout_mse << ", tau";
    for (const auto& t : rep.taus) std::cout << ' ' << t.tau;
    std::cout << '\n';
  }
  json config = cfg.to_json().at("predictor");
  config["shuffle_labels"] = o.shuffle_labels;
  config["objectives"] = objectives;
  out.commit(manifest_for("train-predictor", config, {o.seed}, {{"--bench", a.bench}}));
  return 0;
}

struct PretrainArgs {
  std::string bench, out, config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> bank_size, bins, epochs;
  std::optional<double> lr;
};

int cmd_pretrain(const PretrainArgs& a) {
  ExperimentConfig cfg = a.config.empty() ? paper_mini() : cli::load_config(a.config, paper_mini());
  SearchConfig& s = cfg.search;
  if (a.seed) s.seed = *a.seed;
  if (a.bank_size) s.hypernet.bank_size = *a.bank_size;
  if (a.bins) s.hypernet.bins = *a.bins;
  if (a.epochs) s.pretrain.epochs = *a.epochs;
  if (a.lr) s.pretrain.lr = *a.lr;

  const Benchmark bench = Benchmark::load(a.bench);
  PretrainReport rep;
  const MetaHypernetwork net = make_pretrained_hypernet(bench, s, &rep);
  OutputDir out(a.out);
  net.save(out.claim("hypernet.json"));
  out.write("pretrain_report.json",
            json{{"epochs", rep.epochs}, {"kl_history", rep.kl_history}, {"final_kl", rep.final_kl}}.dump(2) + "\n");
  out.commit(manifest_for("pretrain-hypernet", s.to_json(), {s.seed}, {{"--bench", a.bench}}));
  std::cout << "pretrained in " << rep.epochs << " epochs, max KL " << rep.final_kl << '\n';
  return 0;
}

struct SearchArgs {
  std::string bench, out, init;
  SearchFlags flags;
};

int cmd_search(const SearchArgs& a) {
  const ExperimentConfig cfg = a.flags.resolve();
  const Benchmark bench = Benchmark::load(a.bench);
  const HardwareModels hw = load_hardware(bench, cfg, a.flags.predictors);
  const SearchConfig& s = cfg.search;

  MetaHypernetwork initial =
      a.init.empty() ? make_pretrained_hypernet(bench, s) : MetaHypernetwork::load(a.init, bench.space);
  SearchResult res = search(s, bench, std::move(initial), hw.view());

  OutputDir out(a.out);
  res.net.save(out.claim("hypernet.json"));
  out.write("trace.jsonl", res.trace.to_jsonl());
  std::vector<ProfileResult> profiles;
  for (const auto& d : bench.devices) {
    profiles.push_back(profile_pareto(res.net, bench, d.id, s.profile_count));
    write_profile(out, profiles.back(), bench);
  }
  const json summary = {{"seed", s.seed},
                        {"devices", profile_summary(profiles, bench)},
                        {"mean_hv_train", mean_hv(profiles, bench.train_devices())},
                        {"mean_hv_test", bench.test_devices().empty() ? json(nullptr)
                                                                      : json(mean_hv(profiles, bench.test_devices()))}};
  out.write("summary.json", summary.dump(2) + "\n");

  std::map<std::string, fs::path> inputs{{"--bench", a.bench}};
  if (!a.flags.config.empty()) inputs["--config"] = a.flags.config;
  if (!a.init.empty()) inputs["--init"] = a.init;
  for (std::size_t i = 0; i < a.flags.predictors.size(); ++i) {
    inputs["--predictor[" + std::to_string(i) + "]"] = a.flags.predictors[i];
  }
  json config = cfg.to_json();
  config.erase("seeds");
  out.commit(manifest_for("search", config, {s.seed}, inputs));
  for (const auto& p : profiles) {
    std::cout << "device " << p.device << (bench.device(p.device).train ? " (train)" : " (test) ") << " hv "
              << p.hv << '\n';
  }
  return 0;
}

struct ProfileArgs {
  std::string ckpt, bench, out;
  std::vector<std::size_t> devices;
  std::size_t count = 24;
};

int cmd_profile(const ProfileArgs& a) {
  const Benchmark bench = Benchmark::load(a.bench);
  const MetaHypernetwork net = MetaHypernetwork::load(a.ckpt, bench.space);
  if (net.num_objectives() != bench.num_objectives()) {
    throw UsageError("--ckpt was trained for " + std::to_string(net.num_objectives()) + " objectives");
  }
  OutputDir out(a.out);
  std::vector<ProfileResult> profiles;
  for (auto d : pick_devices(bench, a.devices)) {
    profiles.push_back(profile_pareto(net, bench, d, a.count));
    write_profile(out, profiles.back(), bench);
    std::cout << "device " << d << " hv " << profiles.back().hv << '\n';
  }
  out.write("summary.json", json{{"devices", profile_summary(profiles, bench)}}.dump(2) + "\n");
  out.commit(manifest_for("profile", {{"count", a.count}, {"devices", pick_devices(bench, a.devices)}}, {},
                          {{"--ckpt", a.ckpt}, {"--bench", a.bench}}));
  return 0;
}

struct EvaluateArgs {
  std::string front, bench, true_front, out;
  std::size_t device = 0;
};

int cmd_evaluate(const EvaluateArgs& a) {
  const Benchmark bench = Benchmark::load(a.bench);
  pick_devices(bench, {a.device});
  const std::vector<Vec> pts = read_front_csv(a.front);
  const std::vector<Vec> truth =
      a.true_front.empty() ? enumerate_true_front(bench, a.device).values() : read_front_csv(a.true_front);
  const std::size_t M = bench.num_objectives();
  for (const auto* set : {&pts, &truth}) {
    if (set->empty()) throw UsageError(set == &pts ? "--front is empty" : "--true-front is empty");
    for (const auto& p : *set) {
      if (p.size() != M) throw UsageError("front files must have " + std::to_string(M) + " columns");
    }
  }
  const Vec ref(M, 1.0);
  const json metrics = {{"device", a.device},
                        {"reference_point", ref},
                        {"points", pts.size()},
                        {"true_front_points", truth.size()},
                        {"hv", hypervolume(pts, ref)},
                        {"true_hv", hypervolume(truth, ref)},
                        {"gd", gd(pts, truth)},
                        {"igd", igd(pts, truth)},
                        {"gd_plus", gd_plus(pts, truth)},
                        {"igd_plus", igd_plus(pts, truth)}};
  std::cout << metrics.dump(2) << '\n';
  if (!a.out.empty()) {
    OutputDir out(a.out);
    out.write("metrics.json", metrics.dump(2) + "\n");
    if (a.true_front.empty()) write_front_csv(out.claim("true_front.csv"), truth);
    std::map<std::string, fs::path> inputs{{"--front", a.front}, {"--bench", a.bench}};
    if (!a.true_front.empty()) inputs["--true-front"] = a.true_front;
    out.commit(manifest_for("evaluate", {{"device", a.device}}, {}, inputs));
  }
  return 0;
}

struct BaselineArgs {
  std::string kind = "rs", bench, out;
  std::vector<std::size_t> devices;
  std::size_t count = 24;
  std::uint64_t seed = 0;
};

int cmd_baseline(const BaselineArgs& a) {
  const Benchmark bench = Benchmark::load(a.bench);
  const BaselineKind kind = parse_baseline(a.kind);
  OutputDir out(a.out);
  std::vector<ProfileResult> profiles;
  for (auto d : pick_devices(bench, a.devices)) {
    profiles.push_back(run_baseline(kind, bench, d, a.count, a.seed, paper_mini().search.hypernet));
    write_profile(out, profiles.back(), bench);
    std::cout << a.kind << " device " << d << " hv " << profiles.back().hv << '\n';
  }
  out.write("summary.json", json{{"devices", profile_summary(profiles, bench)}}.dump(2) + "\n");
  out.commit(manifest_for("baseline", {{"kind", a.kind}, {"count", a.count}}, {a.seed}, {{"--bench", a.bench}}));
  return 0;
}

struct AblateArgs {
  std::string bench, out;
  std::vector<std::string> schemes, estimators;
  std::vector<double> constraint_sweep;
  std::vector<std::uint64_t> seeds;
  SearchFlags flags;
};

int cmd_ablate(const AblateArgs& a) {
  ExperimentConfig cfg = a.flags.resolve();
  if (!a.seeds.empty()) cfg.seeds = a.seeds;
  const Benchmark bench = Benchmark::load(a.bench);
  const HardwareModels hw = load_hardware(bench, cfg, a.flags.predictors);
  const std::size_t M = bench.num_objectives();

  struct Variant {
    std::string name;
    SearchConfig config;
  };
  std::vector<Variant> variants;
  std::string axis;
  for (const auto& s : a.schemes) {
    axis = "scheme";
    variants.push_back({s, cfg.search});
    variants.back().config.scheme = parse_scheme(s);
  }
  for (const auto& e : a.estimators) {
    axis = "estimator";
    variants.push_back({e, cfg.search});
    variants.back().config.estimator = parse_estimator(e);
  }
  for (double c : a.constraint_sweep) {
    axis = "constraint";
    variants.push_back({format_double(c), cfg.search});
    variants.back().config.constraints.assign(M - 1, c);
  }

  std::ostringstream rows, summary;
  rows << axis << ",seed,device,split,hv,best_error,unique_archs\n";
  summary << axis << ",mean_hv_train,mean_hv_test,mean_best_error\n";
  for (auto& v : variants) {
    double train = 0.0, test = 0.0, best = 0.0;
    std::size_t n_best = 0;
    for (auto seed : cfg.seeds) {
      v.config.seed = seed;
      const SeedRun run = run_seed(bench, v.config, hw.view());
      for (const auto& p : run.profiles) {
        double be = 1.0;
        for (const auto& pt : p.points) be = std::min(be, pt[0]);
        const bool is_train = bench.device(p.device).train;
        rows << v.name << ',' << seed << ',' << p.device << ',' << (is_train ? "train" : "test") << ','
             << format_double(p.hv) << ',' << format_double(be) << ',' << p.unique_archs << '\n';
        if (is_train) {
          best += be;
          ++n_best;
        }
      }
      train += mean_hv(run.profiles, bench.train_devices());
      if (!bench.test_devices().empty()) test += mean_hv(run.profiles, bench.test_devices());
    }
    const double k = static_cast<double>(cfg.seeds.size());
    summary << v.name << ',' << format_double(train / k) << ','
            << (bench.test_devices().empty() ? std::string("") : format_double(test / k)) << ','
            << format_double(best / static_cast<double>(n_best)) << '\n';
    std::cout << axis << ' ' << v.name << ": mean train hv " << train / k << '\n';
  }

  OutputDir out(a.out);
  out.write("ablation.csv", rows.str());
  out.write("ablation_summary.csv", summary.str());
  std::map<std::string, fs::path> inputs{{"--bench", a.bench}};
  if (!a.flags.config.empty()) inputs["--config"] = a.flags.config;
  for (std::size_t i = 0; i < a.flags.predictors.size(); ++i) {
    inputs["--predictor[" + std::to_string(i) + "]"] = a.flags.predictors[i];
  }
  json config = cfg.to_json();
  config["axis"] = axis;
  json names = json::array();
  for (const auto& v : variants) names.push_back(v.name);
  config["variants"] = names;
  out.commit(manifest_for("ablate", config, cfg.seeds, inputs));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-objective differentiable architecture search on synthetic hardware benchmarks", "modnas"};
  app.set_version_flag("--version", MODNAS_VERSION);
  app.require_subcommand(1);
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "Silence warnings");

  GenBenchArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-bench", "Generate a synthetic benchmark");
  gen_cmd->add_option("--out", gen.out, "Output directory")->required();
  gen_cmd->add_option("--config", gen.config, "INI file with a [benchmark] section")->check(CLI::ExistingFile);
  gen_cmd->add_option("--seed", gen.seed);
  gen_cmd->add_option("--choices", gen.choices, "Choices per dimension, e.g. 4,4,4,4")->delimiter(',');
  gen_cmd->add_option("--objectives", gen.objectives, "M, including the error objective");
  gen_cmd->add_option("--devices", gen.devices);
  gen_cmd->add_option("--train-devices", gen.train_devices);
  gen_cmd->add_option("--profile-size", gen.profile_size, "Reference architectures per device profile");
  gen_cmd->add_option("--heterogeneity", gen.heterogeneity);
  gen_cmd->add_option("--conflict", gen.conflict);
  gen_cmd->add_option("--noise", gen.noise);
  gen_cmd->add_option("--interaction", gen.interaction);

  TrainPredictorArgs tp;
  auto* tp_cmd = app.add_subcommand("train-predictor", "Train the hardware predictor of each objective");
  tp_cmd->add_option("--bench", tp.bench)->required()->check(CLI::ExistingFile);
  tp_cmd->add_option("--out", tp.out)->required();
  tp_cmd->add_option("--config", tp.config, "INI file with a [predictor] section")->check(CLI::ExistingFile);
  tp_cmd->add_option("--objective", tp.objectives, "Hardware objective(s); default all")->delimiter(',');
  tp_cmd->add_option("--epochs", tp.epochs);
  tp_cmd->add_option("--samples", tp.samples, "(config, device) pairs; 0 = all");
  tp_cmd->add_option("--hidden", tp.hidden);
  tp_cmd->add_option("--lr", tp.lr);
  tp_cmd->add_option("--train-fraction", tp.train_fraction);
  tp_cmd->add_option("--seed", tp.seed);
  tp_cmd->add_flag("--shuffle-labels", tp.shuffle_labels, "Negative control");

  PretrainArgs pre;
  auto* pre_cmd = app.add_subcommand("pretrain-hypernet", "Initialize the hypernetwork to uniform logits");
  pre_cmd->add_option("--bench", pre.bench)->required()->check(CLI::ExistingFile);
  pre_cmd->add_option("--out", pre.out)->required();
  pre_cmd->add_option("--config", pre.config)->check(CLI::ExistingFile);
  pre_cmd->add_option("--seed", pre.seed);
  pre_cmd->add_option("--bank-size", pre.bank_size);
  pre_cmd->add_option("--bins", pre.bins);
  pre_cmd->add_option("--epochs", pre.epochs);
  pre_cmd->add_option("--lr", pre.lr);

  SearchArgs sa;
  auto* search_cmd = app.add_subcommand("search", "Search the hypernetwork over the train devices");
  search_cmd->add_option("--bench", sa.bench)->required()->check(CLI::ExistingFile);
  search_cmd->add_option("--out", sa.out)->required();
  search_cmd->add_option("--init", sa.init, "Pretrained hypernetwork checkpoint")->check(CLI::ExistingFile);
  sa.flags.add_to(search_cmd, true);

  ProfileArgs pa;
  auto* profile_cmd = app.add_subcommand("profile", "Read out a Pareto front from a hypernetwork");
  profile_cmd->add_option("--ckpt", pa.ckpt)->required()->check(CLI::ExistingFile);
  profile_cmd->add_option("--bench", pa.bench)->required()->check(CLI::ExistingFile);
  profile_cmd->add_option("--out", pa.out)->required();
  profile_cmd->add_option("--device", pa.devices, "Device id(s); default all")->delimiter(',');
  profile_cmd->add_option("--count", pa.count, "Number of preference vectors")->check(CLI::Range(2, 100000));

  EvaluateArgs ea;
  auto* eval_cmd = app.add_subcommand("evaluate", "Front metrics against the enumerated true front");
  eval_cmd->add_option("--front", ea.front)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--bench", ea.bench)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--device", ea.device)->required();
  eval_cmd->add_option("--true-front", ea.true_front)->check(CLI::ExistingFile);
  eval_cmd->add_option("--out", ea.out, "Also write metrics.json here");

  BaselineArgs ba;
  auto* base_cmd = app.add_subcommand("baseline", "Random search or an untrained hypernetwork");
  base_cmd->add_option("--kind", ba.kind)->check(CLI::IsMember({"rs", "rhpn"}));
  base_cmd->add_option("--bench", ba.bench)->required()->check(CLI::ExistingFile);
  base_cmd->add_option("--out", ba.out)->required();
  base_cmd->add_option("--device", ba.devices)->delimiter(',');
  base_cmd->add_option("--count", ba.count)->check(CLI::Range(1, 100000));
  base_cmd->add_option("--seed", ba.seed);

  AblateArgs ab;
  auto* ablate_cmd = app.add_subcommand("ablate", "Compare search variants over several seeds");
  ablate_cmd->add_option("--bench", ab.bench)->required()->check(CLI::ExistingFile);
  ablate_cmd->add_option("--out", ab.out)->required();
  auto* g_schemes = ablate_cmd->add_option("--schemes", ab.schemes)->delimiter(',')->check(
      CLI::IsMember({"mgd", "mean", "sequential", "mc"}));
  auto* g_est = ablate_cmd->add_option("--estimators", ab.estimators)->delimiter(',')->check(
      CLI::IsMember({"reinmax", "gumbel_st"}));
  auto* g_con = ablate_cmd->add_option("--constraints", ab.constraint_sweep, "Values of c applied to every hardware objective")
                    ->delimiter(',')
                    ->check(CLI::Range(0.0, 1.0));
  g_schemes->excludes(g_est)->excludes(g_con);
  g_est->excludes(g_con);
  ablate_cmd->add_option("--seeds", ab.seeds)->delimiter(',');
  ab.flags.add_to(ablate_cmd, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return static_cast<int>(ErrorClass::usage);
  }
  set_warnings_enabled(!quiet);

  try {
    if (*gen_cmd) return cmd_gen_bench(gen);
    if (*tp_cmd) return cmd_train_predictor(tp);
    if (*pre_cmd) return cmd_pretrain(pre);
    if (*search_cmd) return cmd_search(sa);
    if (*profile_cmd) return cmd_profile(pa);
    if (*eval_cmd) return cmd_evaluate(ea);
    if (*base_cmd) return cmd_baseline(ba);
    if (*ablate_cmd) {
      if (ab.schemes.empty() && ab.estimators.empty() && ab.constraint_sweep.empty()) {
        throw UsageError("ablate needs one of --schemes, --estimators or --constraints");
      }
      return cmd_ablate(ab);
    }
  } catch (const Error& e) {
    std::cerr << "modnas: " << e.what() << '\n';
    return e.exit_code();
  } catch (const json::exception& e) {
    std::cerr << "modnas: malformed document: " << e.what() << '\n';
    return static_cast<int>(ErrorClass::data);
  } catch (const fs::filesystem_error& e) {
    std::cerr << "modnas: " << e.what() << '\n';
    return static_cast<int>(ErrorClass::data);
  } catch (const std::exception& e) {
    std::cerr << "modnas: internal error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
