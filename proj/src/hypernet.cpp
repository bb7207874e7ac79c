#include "modnas/hypernet.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "modnas/adam.hpp"
#include "modnas/errors.hpp"
#include "modnas/layers.hpp"
#include "modnas/rng.hpp"

namespace modnas {

namespace {

std::string bank_name(std::size_t m) { return "bank.obj" + std::to_string(m); }

std::size_t meta_size(const ParamStore& p, const char* key) {
  const auto it = p.metadata().find(key);
  if (it == p.metadata().end()) throw SchemaError(std::string("hypernetwork checkpoint lacks '") + key + "'");
  return static_cast<std::size_t>(std::stoull(it->second));
}

}  // namespace

std::size_t quantize_preference(double r, std::size_t bins) {
  if (bins == 0) throw ParameterError("quantization needs at least one bin");
  if (!(r >= 0.0 && r <= 1.0)) throw ParameterError("preference weight outside [0, 1]");
  const auto idx = static_cast<std::size_t>(std::floor(r * static_cast<double>(bins)));
  return std::min(idx, bins - 1);
}

MetaHypernetwork::MetaHypernetwork(const ArchSpace& space, std::size_t num_objectives,
                                   std::size_t feature_size, const HypernetOptions& options)
    : space_(space),
      num_objectives_(num_objectives),
      feature_size_(feature_size),
      bank_(options.bank_size),
      bins_(options.bins) {
  if (num_objectives < 2) throw ParameterError("hypernetwork needs at least 2 objectives");
  if (bank_ == 0) throw ParameterError("bank size must be positive");
  if (bins_ == 0) throw ParameterError("embedding table needs at least one row");
  if (feature_size_ == 0) throw ParameterError("device feature size must be positive");
  if (space_.encoding_size() < num_objectives - 1) {
    throw ParameterError("encoding too short to split across the hardware objectives");
  }
  init_layout();
  Rng rng(options.seed);
  auto& w0 = params_.add("phi0.weight", {bank_, feature_size_});
  params_.add("phi0.bias", {bank_});
  for (double& v : w0.value) v = rng.normal(0.0, options.init_std);
  for (std::size_t m = 2; m <= num_objectives_; ++m) {
    auto& e = params_.add(bank_name(m), {bank_, bins_, block_size(m)});
    for (double& v : e.value) v = rng.normal(0.0, options.init_std);
  }
  auto& meta = params_.metadata();
  meta["kind"] = "hypernetwork";
  meta["space_hash"] = space_.descriptor_hash();
  meta["num_objectives"] = std::to_string(num_objectives_);
  meta["feature_size"] = std::to_string(feature_size_);
  meta["bank_size"] = std::to_string(bank_);
  meta["bins"] = std::to_string(bins_);
}

void MetaHypernetwork::init_layout() {
  const std::size_t parts = num_objectives_ - 1;
  const std::size_t base = space_.encoding_size() / parts;
  const std::size_t extra = space_.encoding_size() % parts;
  block_sizes_.clear();
  block_offsets_.clear();
  std::size_t off = 0;
  for (std::size_t i = 0; i < parts; ++i) {
    block_offsets_.push_back(off);
    block_sizes_.push_back(base + (i < extra ? 1 : 0));
    off += block_sizes_.back();
  }
}

std::size_t MetaHypernetwork::block_size(std::size_t m) const {
  if (m < 2 || m > num_objectives_) throw IndexError("no logit block for objective " + std::to_string(m));
  return block_sizes_[m - 2];
}

std::size_t MetaHypernetwork::block_offset(std::size_t m) const {
  if (m < 2 || m > num_objectives_) throw IndexError("no logit block for objective " + std::to_string(m));
  return block_offsets_[m - 2];
}

MetaHypernetwork::Forward MetaHypernetwork::forward(const PreferenceVector& r,
                                                    std::span<const double> features) const {
  check_size(r.size(), num_objectives_, "preference vector");
  check_size(features.size(), feature_size_, "device feature");
  Forward f;
  f.features.assign(features.begin(), features.end());
  const Vec pre = linear_forward(features, params_.value("phi0.weight"), params_.value("phi0.bias"));
  f.mix = softmax_tempered(pre, 1.0);
  f.logits.assign(output_size(), 0.0);
  for (std::size_t m = 2; m <= num_objectives_; ++m) {
    const std::size_t row = quantize_preference(r[m - 1], bins_);
    f.rows.push_back(row);
    const std::size_t width = block_size(m);
    const auto table = params_.value(bank_name(m));
    double* out = f.logits.data() + block_offset(m);
    for (std::size_t k = 0; k < bank_; ++k) {
      const double* e = table.data() + (k * bins_ + row) * width;
      for (std::size_t j = 0; j < width; ++j) out[j] += f.mix[k] * e[j];
    }
  }
  return f;
}

void MetaHypernetwork::backward(const Forward& fwd, std::span<const double> upstream) {
  check_size(upstream.size(), output_size(), "hypernetwork upstream gradient");
  Vec dmix(bank_, 0.0);
  for (std::size_t m = 2; m <= num_objectives_; ++m) {
    const std::size_t row = fwd.rows[m - 2];
    const std::size_t width = block_size(m);
    const auto table = params_.value(bank_name(m));
    auto grad = params_.grad(bank_name(m));
    const double* u = upstream.data() + block_offset(m);
    for (std::size_t k = 0; k < bank_; ++k) {
      const std::size_t at = (k * bins_ + row) * width;
      double acc = 0.0;
      for (std::size_t j = 0; j < width; ++j) {
        acc += u[j] * table[at + j];
        grad[at + j] += fwd.mix[k] * u[j];
      }
      dmix[k] += acc;
    }
  }
  const Vec dpre = softmax_backward(fwd.mix, dmix, 1.0);
  linear_backward(fwd.features, params_.value("phi0.weight"), dpre, params_.grad("phi0.weight"),
                  params_.grad("phi0.bias"));
}

void MetaHypernetwork::save(const std::filesystem::path& path) const { params_.save(path); }

MetaHypernetwork MetaHypernetwork::from_params(ParamStore params, const ArchSpace& space) {
  const auto kind = params.metadata().find("kind");
  if (kind == params.metadata().end() || kind->second != "hypernetwork") {
    throw SchemaError("checkpoint is not a hypernetwork");
  }
  if (params.metadata().at("space_hash") != space.descriptor_hash()) {
    throw UsageError("hypernetwork checkpoint was built for a different architecture space");
  }
  MetaHypernetwork net;
  net.space_ = space;
  net.num_objectives_ = meta_size(params, "num_objectives");
  net.feature_size_ = meta_size(params, "feature_size");
  net.bank_ = meta_size(params, "bank_size");
  net.bins_ = meta_size(params, "bins");
  net.init_layout();
  const auto expect = [&](const std::string& name, std::vector<std::size_t> shape) {
    if (!params.contains(name) || params.block(name).shape != shape) {
      throw SchemaError("hypernetwork checkpoint block '" + name + "' missing or misshapen");
    }
  };
  expect("phi0.weight", {net.bank_, net.feature_size_});
  expect("phi0.bias", {net.bank_});
  for (std::size_t m = 2; m <= net.num_objectives_; ++m) {
    expect(bank_name(m), {net.bank_, net.bins_, net.block_size(m)});
  }
  net.params_ = std::move(params);
  return net;
}

MetaHypernetwork MetaHypernetwork::load(const std::filesystem::path& path, const ArchSpace& space) {
  return from_params(ParamStore::load(path), space);
}

double max_uniform_kl(const ArchSpace& space, std::span<const double> logits) {
  check_size(logits.size(), space.encoding_size(), "architecture logits");
  double worst = 0.0;
  for (std::size_t d = 0; d < space.dims(); ++d) {
    const Vec p = softmax_tempered(space.block(logits, d), 1.0);
    const double u = 1.0 / static_cast<double>(p.size());
    double kl = 0.0;
    for (double pi : p) kl += u * std::log(u / pi);
    worst = std::max(worst, kl);
  }
  return worst;
}

PretrainReport pretrain_uniform(MetaHypernetwork& net, const std::vector<Vec>& feature_pool,
                                const PretrainOptions& options) {
  if (feature_pool.empty()) throw ParameterError("pretraining needs at least one device feature");
  const auto dir = DirichletParams::uniform(net.num_objectives());
  Rng holdout_rng = Rng::substream(options.seed, {1});
  std::vector<std::pair<PreferenceVector, std::size_t>> holdout;
  for (std::size_t i = 0; i < options.holdout; ++i) {
    auto r = sample_preference(dir, holdout_rng);
    holdout.emplace_back(std::move(r), holdout_rng.below(feature_pool.size()));
  }
  const auto held_out_kl = [&] {
    double worst = 0.0;
    for (const auto& [r, d] : holdout) {
      worst = std::max(worst, max_uniform_kl(net.space(), net.logits(r, feature_pool[d])));
    }
    return worst;
  };

  PretrainReport report;
  report.final_kl = held_out_kl();
  report.kl_history.push_back(report.final_kl);
  if (report.final_kl < options.kl_target) return report;

  AdamOptions ao;
  ao.lr = options.lr;
  ao.weight_decay = 0.0;
  Adam adam(net.params().num_params(), ao);
  Rng rng = Rng::substream(options.seed, {2});
  const Vec zeros(net.output_size(), 0.0);
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    net.params().zero_grad();
    for (std::size_t b = 0; b < options.batch_size; ++b) {
      const auto r = sample_preference(dir, rng);
      const auto fwd = net.forward(r, feature_pool[rng.below(feature_pool.size())]);
      Vec g = mse_backward(fwd.logits, zeros, 1.0 / static_cast<double>(options.batch_size));
      net.backward(fwd, g);
    }
    const Vec grad = net.params().flat_grads();
    if (!all_finite(grad)) throw PretrainingError("non-finite gradient during hypernetwork pretraining");
    adam.step(net.params(), grad);
    report.epochs = epoch + 1;
    report.final_kl = held_out_kl();
    report.kl_history.push_back(report.final_kl);
    if (report.final_kl < options.kl_target) return report;
  }
  throw PretrainingError("hypernetwork pretraining did not reach max KL " + std::to_string(options.kl_target) +
                         " within " + std::to_string(options.epochs) + " epochs (last " +
                         std::to_string(report.final_kl) + ")");
}

}  // namespace modnas
