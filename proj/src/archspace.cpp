#include "modnas/archspace.hpp"

#include <algorithm>

#include "modnas/errors.hpp"
#include "modnas/hash.hpp"

namespace modnas {

ArchSpace::ArchSpace(std::vector<std::size_t> choices, std::uint64_t enumeration_cap)
    : choices_(std::move(choices)), cap_(enumeration_cap) {
  if (choices_.empty()) throw ParameterError("architecture space needs at least one dimension");
  total_ = 1;
  for (std::size_t d = 0; d < choices_.size(); ++d) {
    if (choices_[d] < 2) throw ParameterError("dimension " + std::to_string(d) + " has fewer than 2 choices");
    offsets_.push_back(encoding_size_);
    encoding_size_ += choices_[d];
    if (total_ > UINT64_MAX / choices_[d]) throw CapacityError("architecture space size overflows");
    total_ *= choices_[d];
  }
}

void ArchSpace::require_enumerable() const {
  if (total_ > cap_) {
    throw CapacityError("space has " + std::to_string(total_) + " configurations, above the enumeration cap " +
                        std::to_string(cap_));
  }
}

void ArchSpace::validate(const ArchConfig& config) const {
  if (config.choices.size() != dims()) {
    throw ShapeError("config has " + std::to_string(config.choices.size()) + " dimensions, space has " +
                     std::to_string(dims()));
  }
  for (std::size_t d = 0; d < dims(); ++d) {
    if (config.choices[d] >= choices_[d]) {
      throw IndexError("choice " + std::to_string(config.choices[d]) + " out of range in dimension " +
                       std::to_string(d));
    }
  }
}

std::uint64_t ArchSpace::index_of(const ArchConfig& config) const {
  validate(config);
  std::uint64_t idx = 0;
  for (std::size_t d = 0; d < dims(); ++d) idx = idx * choices_[d] + config.choices[d];
  return idx;
}

ArchConfig ArchSpace::config_at(std::uint64_t index) const {
  if (index >= total_) throw IndexError("configuration index " + std::to_string(index) + " out of range");
  ArchConfig c{std::vector<std::size_t>(dims())};
  for (std::size_t d = dims(); d-- > 0;) {
    c.choices[d] = static_cast<std::size_t>(index % choices_[d]);
    index /= choices_[d];
  }
  return c;
}

Vec ArchSpace::encode(const ArchConfig& config) const {
  validate(config);
  Vec x(encoding_size_, 0.0);
  for (std::size_t d = 0; d < dims(); ++d) x[offsets_[d] + config.choices[d]] = 1.0;
  return x;
}

ArchConfig ArchSpace::decode(std::span<const double> encoding) const {
  check_size(encoding.size(), encoding_size_, "architecture encoding");
  ArchConfig c{std::vector<std::size_t>(dims())};
  for (std::size_t d = 0; d < dims(); ++d) {
    auto b = block(encoding, d);
    c.choices[d] = static_cast<std::size_t>(std::max_element(b.begin(), b.end()) - b.begin());
  }
  return c;
}

std::span<const double> ArchSpace::block(std::span<const double> encoding, std::size_t d) const {
  return encoding.subspan(offsets_.at(d), choices_[d]);
}

std::span<double> ArchSpace::mutable_block(std::span<double> encoding, std::size_t d) const {
  return encoding.subspan(offsets_.at(d), choices_[d]);
}

nlohmann::json ArchSpace::to_json() const { return {{"choices", choices_}, {"enumeration_cap", cap_}}; }

ArchSpace ArchSpace::from_json(const nlohmann::json& doc) {
  return ArchSpace(doc.at("choices").get<std::vector<std::size_t>>(),
                   doc.value("enumeration_cap", kDefaultEnumerationCap));
}

std::string ArchSpace::descriptor_hash() const {
  return sha256_hex(nlohmann::json{{"choices", choices_}}.dump());
}

MultilinearResult multilinear_eval(const ArchSpace& space, std::span<const double> table,
                                   std::span<const double> x) {
  check_size(table.size(), space.total_configs(), "objective table");
  check_size(x.size(), space.encoding_size(), "multilinear input");
  const std::size_t D = space.dims();
  MultilinearResult out{0.0, Vec(x.size(), 0.0)};
  std::vector<std::size_t> c(D, 0);
  Vec prefix(D + 1), suffix(D + 1);
  for (std::uint64_t idx = 0; idx < table.size(); ++idx) {
    prefix[0] = 1.0;
    for (std::size_t d = 0; d < D; ++d) prefix[d + 1] = prefix[d] * x[space.offset(d) + c[d]];
    suffix[D] = 1.0;
    for (std::size_t d = D; d-- > 0;) suffix[d] = suffix[d + 1] * x[space.offset(d) + c[d]];
    const double t = table[idx];
    out.value += t * prefix[D];
    for (std::size_t d = 0; d < D; ++d) out.grad[space.offset(d) + c[d]] += t * prefix[d] * suffix[d + 1];
    // odometer, last dimension fastest
    for (std::size_t d = D; d-- > 0;) {
      if (++c[d] < space.choices(d)) break;
      c[d] = 0;
    }
  }
  return out;
}

}  // namespace modnas
