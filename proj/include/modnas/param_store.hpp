#pragma once

#include <cstddef>
#include <deque>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "modnas/tensor.hpp"

namespace modnas {

struct ParamBlock {
  std::string name;
  std::vector<std::size_t> shape;
  Vec value;
  Vec grad;  // same shape as value, zero-initialized
};

/// Named flat parameter blocks with matching gradient blocks.
///
/// Block order is insertion order and defines the layout of the flat
/// parameter/gradient vectors. References returned by `add` stay valid.
class ParamStore {
 public:
  static constexpr int kSchemaVersion = 1;

  ParamBlock& add(const std::string& name, std::vector<std::size_t> shape, double fill = 0.0);

  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  ParamBlock& block(const std::string& name);
  const ParamBlock& block(const std::string& name) const;
  std::span<double> value(const std::string& name) { return block(name).value; }
  std::span<const double> value(const std::string& name) const { return block(name).value; }
  std::span<double> grad(const std::string& name) { return block(name).grad; }
  std::span<const double> grad(const std::string& name) const { return block(name).grad; }

  const std::deque<ParamBlock>& blocks() const noexcept { return blocks_; }
  std::deque<ParamBlock>& blocks() noexcept { return blocks_; }
  std::size_t num_params() const noexcept { return total_; }

  void zero_grad();
  Vec flat_values() const;
  Vec flat_grads() const;
  void set_flat_values(std::span<const double> flat);
  void set_flat_grads(std::span<const double> flat);
  /// Offset of a block inside the flat layout.
  std::size_t offset(const std::string& name) const;

  std::map<std::string, std::string>& metadata() noexcept { return meta_; }
  const std::map<std::string, std::string>& metadata() const noexcept { return meta_; }

  /// Header (schema, version, metadata, block names and shapes) plus row-major values.
  nlohmann::json to_json() const;
  static ParamStore from_json(const nlohmann::json& doc);
  void save(const std::filesystem::path& path) const;
  static ParamStore load(const std::filesystem::path& path);

 private:
  std::deque<ParamBlock> blocks_;
  std::unordered_map<std::string, std::size_t> index_;
  std::map<std::string, std::string> meta_;
  std::size_t total_ = 0;
};

/// Writes `text` to `path` through a temporary file and a rename.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace modnas
