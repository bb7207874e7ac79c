#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "modnas/tensor.hpp"

namespace modnas {

/// One choice index per decision dimension.
struct ArchConfig {
  std::vector<std::size_t> choices;
  friend bool operator==(const ArchConfig&, const ArchConfig&) = default;
};

/// Discrete architecture space: D dimensions with |O_d| >= 2 choices each.
///
/// Configurations map bijectively onto flat indices in [0, total_configs)
/// with the last dimension varying fastest. The architecture encoding is the
/// concatenation of per-dimension one-hot blocks (length sum_d |O_d|).
class ArchSpace {
 public:
  static constexpr std::uint64_t kDefaultEnumerationCap = 1'000'000;

  ArchSpace() = default;
  explicit ArchSpace(std::vector<std::size_t> choices, std::uint64_t enumeration_cap = kDefaultEnumerationCap);

  std::size_t dims() const noexcept { return choices_.size(); }
  std::size_t choices(std::size_t d) const { return choices_.at(d); }
  const std::vector<std::size_t>& choice_counts() const noexcept { return choices_; }
  std::size_t encoding_size() const noexcept { return encoding_size_; }
  /// Start of dimension d inside the encoding.
  std::size_t offset(std::size_t d) const { return offsets_.at(d); }
  std::uint64_t total_configs() const noexcept { return total_; }
  std::uint64_t enumeration_cap() const noexcept { return cap_; }
  /// Throws CapacityError when total_configs exceeds the enumeration cap.
  void require_enumerable() const;

  void validate(const ArchConfig& config) const;
  std::uint64_t index_of(const ArchConfig& config) const;
  ArchConfig config_at(std::uint64_t index) const;

  Vec encode(const ArchConfig& config) const;
  /// Per-dimension argmax of an encoding-shaped vector (first maximum wins).
  ArchConfig decode(std::span<const double> encoding) const;
  std::span<const double> block(std::span<const double> encoding, std::size_t d) const;
  std::span<double> mutable_block(std::span<double> encoding, std::size_t d) const;

  nlohmann::json to_json() const;
  static ArchSpace from_json(const nlohmann::json& doc);
  /// SHA-256 of the canonical space descriptor.
  std::string descriptor_hash() const;

  friend bool operator==(const ArchSpace& a, const ArchSpace& b) { return a.choices_ == b.choices_; }

 private:
  std::vector<std::size_t> choices_;
  std::vector<std::size_t> offsets_;
  std::size_t encoding_size_ = 0;
  std::uint64_t total_ = 0;
  std::uint64_t cap_ = kDefaultEnumerationCap;
};

struct MultilinearResult {
  double value = 0.0;
  Vec grad;  // d value / d x, encoding-shaped
};

/// Multilinear extension of a lookup table:
///   value(x) = sum_c table[c] * prod_d x_d[c_d]
/// where x is encoding-shaped (per-dimension weight vectors, not required to be
/// normalized). At one-hot vertices the value equals the table entry.
MultilinearResult multilinear_eval(const ArchSpace& space, std::span<const double> table,
                                   std::span<const double> x);

}  // namespace modnas
