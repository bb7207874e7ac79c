#include <doctest.h>

#include <cmath>

#include "modnas/errors.hpp"
#include "modnas/gradcheck.hpp"
#include "modnas/hypernet.hpp"
#include "test_util.hpp"

using namespace modnas;
using modnas::testing::random_vec;
using modnas::testing::uniform_vec;

namespace {

PreferenceVector random_pref(Rng& rng, std::size_t M) {
  return sample_preference(DirichletParams::uniform(M), rng);
}

}  // namespace

TEST_SUITE("hypernet") {

TEST_CASE("preference quantization") {
  CHECK(quantize_preference(0.0, 100) == 0);
  CHECK(quantize_preference(0.5, 100) == 50);
  CHECK(quantize_preference(0.999, 100) == 99);
  CHECK(quantize_preference(1.0, 100) == 99);
  CHECK(quantize_preference(0.26, 4) == 1);
  CHECK_THROWS_AS(quantize_preference(-0.1, 10), ParameterError);
  CHECK_THROWS_AS(quantize_preference(1.5, 10), ParameterError);
}

TEST_CASE("layout and parameter count") {
  const ArchSpace space({3, 3, 3});  // encoding 9
  HypernetOptions opt;
  opt.bank_size = 4;
  opt.bins = 5;
  const MetaHypernetwork net(space, 3, 6, opt);
  CHECK(net.block_size(2) == 5);
  CHECK(net.block_size(3) == 4);
  CHECK(net.block_offset(3) == 5);
  CHECK(net.params().num_params() == 4 * 6 + 4 + 4 * 5 * 5 + 4 * 5 * 4);
  CHECK_THROWS_AS(net.block_size(1), IndexError);
  CHECK_THROWS_AS(MetaHypernetwork(space, 1, 6, opt), ParameterError);
}

TEST_CASE("forward equals the mixture of bank rows") {
  const ArchSpace space({4, 4, 4, 4});
  HypernetOptions opt;
  opt.bank_size = 7;
  opt.bins = 10;
  opt.init_std = 0.7;
  const MetaHypernetwork net(space, 3, 4, opt);
  Rng rng(2);
  const Vec d = uniform_vec(rng, 4);
  const PreferenceVector r(Vec{0.2, 0.35, 0.45});
  const auto f = net.forward(r, d);

  // oracle: mixture weights from the raw parameters
  const auto w0 = net.params().value("phi0.weight");
  const auto b0 = net.params().value("phi0.bias");
  Vec pre(7);
  double zsum = 0.0;
  for (std::size_t k = 0; k < 7; ++k) {
    pre[k] = b0[k];
    for (std::size_t i = 0; i < 4; ++i) pre[k] += w0[k * 4 + i] * d[i];
    zsum += std::exp(pre[k]);
  }
  CHECK(f.rows == std::vector<std::size_t>{3, 4});
  for (std::size_t m = 2; m <= 3; ++m) {
    const auto table = net.params().value("bank.obj" + std::to_string(m));
    const std::size_t width = net.block_size(m), row = f.rows[m - 2];
    for (std::size_t j = 0; j < width; ++j) {
      double expect = 0.0;
      for (std::size_t k = 0; k < 7; ++k) expect += std::exp(pre[k]) / zsum * table[(k * 10 + row) * width + j];
      CHECK(f.logits[net.block_offset(m) + j] == doctest::Approx(expect).epsilon(1e-12));
    }
  }
  CHECK_THROWS_AS(net.forward(PreferenceVector(Vec{0.5, 0.5}), d), ShapeError);
  CHECK_THROWS_AS(net.forward(r, Vec(3)), ShapeError);
}

TEST_CASE("backward matches finite differences") {
  Rng rng(21);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::size_t> choices(1 + rng.below(3));
    for (auto& c : choices) c = 2 + rng.below(3);
    const ArchSpace space(choices);
    const std::size_t M = 2 + rng.below(std::min<std::size_t>(2, space.encoding_size() - 1));
    HypernetOptions opt;
    opt.bank_size = 1 + rng.below(5);
    opt.bins = 1 + rng.below(6);
    opt.init_std = 0.8;
    opt.seed = static_cast<std::uint64_t>(trial);
    const std::size_t F = 1 + rng.below(4);
    MetaHypernetwork net(space, M, F, opt);
    const Vec d = random_vec(rng, F);
    const PreferenceVector r = random_pref(rng, M);
    const Vec u = random_vec(rng, net.output_size());

    net.params().zero_grad();
    net.backward(net.forward(r, d), u);
    const Vec analytic = net.params().flat_grads();
    auto loss = [&](const ParamStore&) { return dot(u, net.forward(r, d).logits); };
    worst = std::max(worst, finite_diff_check(loss, net.params(), analytic));
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("default initialization is already near uniform") {
  const ArchSpace space({4, 4, 4, 4});
  MetaHypernetwork net(space, 2, 10);
  Rng rng(1);
  const Vec logits = net.logits(random_pref(rng, 2), uniform_vec(rng, 10));
  CHECK(max_uniform_kl(space, logits) < 1e-3);
  CHECK(max_uniform_kl(space, Vec(16, 0.0)) == doctest::Approx(0.0));
}

TEST_CASE("pretraining drives a far-from-uniform network to uniform logits") {
  const ArchSpace space({4, 4, 4, 4});
  HypernetOptions opt;
  opt.init_std = 1.0;
  opt.bins = 20;
  MetaHypernetwork net(space, 2, 5, opt);
  Rng rng(6);
  std::vector<Vec> pool;
  for (int i = 0; i < 3; ++i) pool.push_back(uniform_vec(rng, 5));
  PretrainOptions po;
  po.epochs = 400;
  const PretrainReport rep = pretrain_uniform(net, pool, po);
  CHECK(rep.kl_history.front() > 1e-3);
  CHECK(rep.final_kl < 1e-3);
  CHECK(rep.kl_history.size() == rep.epochs + 1);
  // held-out check on fresh preferences
  for (int i = 0; i < 20; ++i) {
    CHECK(max_uniform_kl(space, net.logits(random_pref(rng, 2), pool[i % 3])) < 5e-3);
  }
}

TEST_CASE("pretraining reports an exhausted budget") {
  const ArchSpace space({4, 4});
  HypernetOptions opt;
  opt.init_std = 2.0;
  MetaHypernetwork net(space, 2, 3, opt);
  PretrainOptions po;
  po.epochs = 1;
  po.lr = 1e-6;
  CHECK_THROWS_AS(pretrain_uniform(net, {Vec{0.1, 0.2, 0.3}}, po), PretrainingError);
}

TEST_CASE("checkpoint round trip and space tagging") {
  const ArchSpace space({3, 4});
  HypernetOptions opt;
  opt.init_std = 0.5;
  opt.bins = 8;
  const MetaHypernetwork net(space, 2, 4, opt);
  modnas::testing::TempDir dir("hypernet");
  net.save(dir / "h.json");
  const MetaHypernetwork back = MetaHypernetwork::load(dir / "h.json", space);
  const PreferenceVector r(Vec{0.3, 0.7});
  const Vec d{0.1, 0.2, 0.3, 0.4};
  CHECK(back.logits(r, d) == net.logits(r, d));
  CHECK(back.bins() == 8);
  CHECK_THROWS_AS(MetaHypernetwork::load(dir / "h.json", ArchSpace({4, 4})), UsageError);
}

}  // TEST_SUITE
