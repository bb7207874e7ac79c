#include "config_file.hpp"

#include <fstream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "modnas/errors.hpp"

namespace modnas::cli {

namespace {

using nlohmann::json;

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\"'[");
  const auto e = s.find_last_not_of(" \t\"']");
  return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    if (ch == ',' || ch == ' ' || ch == '\t' || ch == '[' || ch == ']') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

json scalar_like(const std::string& text, const json& like, const std::string& key) {
  const std::string v = trim(text);
  std::size_t used = 0;
  try {
    switch (like.type()) {
      case json::value_t::number_unsigned: {
        if (!v.empty() && v[0] == '-') break;
        const auto n = std::stoull(v, &used);
        if (used == v.size()) return n;
        break;
      }
      case json::value_t::number_integer: {
        const auto n = std::stoll(v, &used);
        if (used == v.size()) return n;
        break;
      }
      case json::value_t::number_float: {
        const double d = std::stod(v, &used);
        if (used == v.size()) return d;
        break;
      }
      case json::value_t::boolean:
        if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
        if (v == "false" || v == "0" || v == "no" || v == "off") return false;
        break;
      case json::value_t::string:
        return v;
      default:
        break;
    }
  } catch (const std::logic_error&) {
  }
  throw UsageError("config key '" + key + "': cannot parse '" + v + "'");
}

json value_like(const std::string& text, const json& like, const std::string& key) {
  if (!like.is_array()) return scalar_like(text, like, key);
  const json elem = like.empty() ? json(0.0) : like.front();
  json arr = json::array();
  for (const auto& tok : split_list(text)) arr.push_back(scalar_like(tok, elem, key));
  return arr;
}

void assign(json& doc, const std::string& field, const std::string& text, const std::string& key) {
  if (!doc.contains(field)) throw UsageError("unknown config key '" + key + "'");
  doc[field] = value_like(text, doc[field], key);
}

}  // namespace

ExperimentConfig load_config(const std::filesystem::path& path, const ExperimentConfig& base) {
  std::ifstream in(path);
  if (!in) throw UsageError("--config: cannot open " + path.string());

  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigINI().from_config(in);
  } catch (const CLI::ParseError& e) {
    throw UsageError("--config: " + std::string(e.what()));
  }

  json recipe = base.recipe.to_json();
  json search = base.search.to_json();
  json predictor = base.to_json().at("predictor");
  json experiment = {{"seeds", base.seeds}, {"exact_hardware", base.exact_hardware}};

  for (const auto& item : items) {
    if (item.name == "++" || item.name == "--") continue;
    const std::string section = item.parents.empty() ? std::string{} : item.parents.front();
    const std::string key = (section.empty() ? "" : section + ".") + item.name;
    std::string text;
    for (std::size_t i = 0; i < item.inputs.size(); ++i) text += (i ? "," : "") + item.inputs[i];

    if (section == "benchmark") {
      assign(recipe, item.name, text, key);
    } else if (section == "predictor") {
      assign(predictor, item.name, text, key);
    } else if (section == "search") {
      assign(search, item.name, text, key);
    } else if (section == "hypernet") {
      if (item.name != "bank_size" && item.name != "bins" && item.name != "init_std")
        throw UsageError("unknown config key '" + key + "'");
      assign(search, item.name, text, key);
    } else if (section == "pretrain") {
      if (item.name != "lr" && item.name != "epochs") throw UsageError("unknown config key '" + key + "'");
      assign(search, "pretrain_" + item.name, text, key);
    } else if (section == "frank_wolfe") {
      if (item.name != "max_iters" && item.name != "tol") throw UsageError("unknown config key '" + key + "'");
      assign(search, "fw_" + item.name, text, key);
    } else if (section == "experiment") {
      assign(experiment, item.name, text, key);
    } else {
      throw UsageError("unknown config section '" + section + "' in " + path.string());
    }
  }

  ExperimentConfig out = base;
  out.recipe = BenchmarkRecipe::from_json(recipe);
  out.search = SearchConfig::from_json(search);
  out.predictor.sample_count = predictor.at("sample_count").get<std::size_t>();
  out.predictor.train_fraction = predictor.at("train_fraction").get<double>();
  out.predictor.epochs = predictor.at("epochs").get<std::size_t>();
  out.predictor.batch_size = predictor.at("batch_size").get<std::size_t>();
  out.predictor.lr = predictor.at("lr").get<double>();
  out.predictor.weight_decay = predictor.at("weight_decay").get<double>();
  out.predictor.seed = predictor.at("seed").get<std::uint64_t>();
  out.predictor_hidden = predictor.at("hidden").get<std::size_t>();
  out.seeds = experiment.at("seeds").get<std::vector<std::uint64_t>>();
  out.exact_hardware = experiment.at("exact_hardware").get<bool>();
  if (out.seeds.empty()) throw UsageError("config key 'experiment.seeds' must list at least one seed");
  return out;
}

}  // namespace modnas::cli
