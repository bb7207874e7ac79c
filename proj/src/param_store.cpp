#include "modnas/param_store.hpp"

#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>

#include "modnas/errors.hpp"

namespace modnas {

namespace {
constexpr const char* kSchemaName = "modnas.params";

std::size_t shape_size(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}
}  // namespace

ParamBlock& ParamStore::add(const std::string& name, std::vector<std::size_t> shape, double fill) {
  if (contains(name)) throw StateError("duplicate parameter block '" + name + "'");
  const std::size_t n = shape_size(shape);
  index_.emplace(name, blocks_.size());
  blocks_.push_back(ParamBlock{name, std::move(shape), Vec(n, fill), Vec(n, 0.0)});
  total_ += n;
  return blocks_.back();
}

ParamBlock& ParamStore::block(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw StateError("unknown parameter block '" + name + "'");
  return blocks_[it->second];
}

const ParamBlock& ParamStore::block(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw StateError("unknown parameter block '" + name + "'");
  return blocks_[it->second];
}

void ParamStore::zero_grad() {
  for (auto& b : blocks_) std::fill(b.grad.begin(), b.grad.end(), 0.0);
}

Vec ParamStore::flat_values() const {
  Vec out;
  out.reserve(total_);
  for (const auto& b : blocks_) out.insert(out.end(), b.value.begin(), b.value.end());
  return out;
}

Vec ParamStore::flat_grads() const {
  Vec out;
  out.reserve(total_);
  for (const auto& b : blocks_) out.insert(out.end(), b.grad.begin(), b.grad.end());
  return out;
}

void ParamStore::set_flat_values(std::span<const double> flat) {
  check_size(flat.size(), total_, "flat parameter vector");
  std::size_t off = 0;
  for (auto& b : blocks_) {
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(off), b.value.size(), b.value.begin());
    off += b.value.size();
  }
}

void ParamStore::set_flat_grads(std::span<const double> flat) {
  check_size(flat.size(), total_, "flat gradient vector");
  std::size_t off = 0;
  for (auto& b : blocks_) {
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(off), b.grad.size(), b.grad.begin());
    off += b.grad.size();
  }
}

std::size_t ParamStore::offset(const std::string& name) const {
  const std::size_t idx = index_.at(name);
  std::size_t off = 0;
  for (std::size_t i = 0; i < idx; ++i) off += blocks_[i].value.size();
  return off;
}

nlohmann::json ParamStore::to_json() const {
  nlohmann::json doc;
  doc["schema"] = kSchemaName;
  doc["version"] = kSchemaVersion;
  doc["metadata"] = meta_;
  auto blocks = nlohmann::json::array();
  for (const auto& b : blocks_) {
    blocks.push_back({{"name", b.name}, {"shape", b.shape}, {"data", b.value}});
  }
  doc["blocks"] = std::move(blocks);
  return doc;
}

ParamStore ParamStore::from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("schema").get<std::string>() != kSchemaName) throw SchemaError("not a parameter checkpoint");
    const int version = doc.at("version").get<int>();
    if (version != kSchemaVersion) {
      throw SchemaError("unsupported parameter checkpoint version " + std::to_string(version));
    }
    ParamStore store;
    store.meta_ = doc.at("metadata").get<std::map<std::string, std::string>>();
    for (const auto& jb : doc.at("blocks")) {
      auto& b = store.add(jb.at("name").get<std::string>(), jb.at("shape").get<std::vector<std::size_t>>());
      auto data = jb.at("data").get<Vec>();
      if (data.size() != b.value.size()) throw SchemaError("block '" + b.name + "' data does not match shape");
      b.value = std::move(data);
    }
    return store;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed parameter checkpoint: ") + e.what());
  }
}

void ParamStore::save(const std::filesystem::path& path) const { write_text_atomic(path, to_json().dump()); }

ParamStore ParamStore::load(const std::filesystem::path& path) {
  try {
    return from_json(nlohmann::json::parse(read_text(path)));
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out << text;
    if (!out) throw IoError("failed writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace modnas
