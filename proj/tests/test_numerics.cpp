#include <doctest.h>

#include <cmath>

#include "modnas/adam.hpp"
#include "modnas/errors.hpp"
#include "modnas/gradcheck.hpp"
#include "modnas/hash.hpp"
#include "modnas/layers.hpp"
#include "modnas/param_store.hpp"
#include "modnas/rng.hpp"
#include "test_util.hpp"

using namespace modnas;
using modnas::testing::random_vec;

TEST_SUITE("numerics") {

TEST_CASE("linear forward on a hand example") {
  const Vec w{1, 2, 3, 4};
  const Vec b{0.5, -1};
  const Vec y = linear_forward(Vec{1, 1}, w, b);
  CHECK(y[0] == doctest::Approx(3.5));
  CHECK(y[1] == doctest::Approx(6.0));
  CHECK_THROWS_AS(linear_forward(Vec{1, 1, 1}, w, b), ShapeError);
}

TEST_CASE("matrix helpers") {
  const Matrix m(2, 3, Vec{1, 2, 3, 4, 5, 6});
  const Vec y = matvec(m, Vec{1, 0, -1});
  CHECK(y == Vec{-2, -2});
  const Vec z = matvec_transposed(m, Vec{1, 1});
  CHECK(z == Vec{5, 7, 9});
  const Matrix id = Matrix::identity(3);
  CHECK(matvec(id, Vec{4, 5, 6}) == Vec{4, 5, 6});
  CHECK(dot(Vec{1, 2}, Vec{3, 4}) == 11);
  CHECK(norm(Vec{3, 4}) == doctest::Approx(5));
  CHECK_FALSE(all_finite(Vec{1, NAN}));
}

TEST_CASE("linear backward matches finite differences on random shapes") {
  Rng rng(11);
  double worst = 0.0;
  for (int trial = 0; trial < 120; ++trial) {
    const std::size_t in = 1 + rng.below(6), out = 1 + rng.below(5);
    const Vec up = random_vec(rng, out);
    // pack x, W, b into one vector for the checker
    Vec packed = random_vec(rng, in + out * in + out);
    auto unpack = [&](std::span<const double> v, Vec& x, Vec& w, Vec& b) {
      x.assign(v.begin(), v.begin() + static_cast<long>(in));
      w.assign(v.begin() + static_cast<long>(in), v.begin() + static_cast<long>(in + out * in));
      b.assign(v.begin() + static_cast<long>(in + out * in), v.end());
    };
    auto loss = [&](std::span<const double> v) {
      Vec x, w, b;
      unpack(v, x, w, b);
      return dot(up, linear_forward(x, w, b));
    };
    Vec x, w, b;
    unpack(packed, x, w, b);
    Vec gw(w.size(), 0.0), gb(b.size(), 0.0);
    const Vec gx = linear_backward(x, w, up, gw, gb);
    Vec analytic = gx;
    analytic.insert(analytic.end(), gw.begin(), gw.end());
    analytic.insert(analytic.end(), gb.begin(), gb.end());
    worst = std::max(worst, finite_diff_check(loss, packed, analytic));
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("softmax values and temperature") {
  const Vec p = softmax_tempered(Vec{0.0, std::log(2.0), std::log(3.0)});
  CHECK(p[0] == doctest::Approx(1.0 / 6));
  CHECK(p[1] == doctest::Approx(2.0 / 6));
  CHECK(p[2] == doctest::Approx(3.0 / 6));
  const Vec q = softmax_tempered(Vec{0.0, 2.0 * std::log(3.0)}, 2.0);
  CHECK(q[1] == doctest::Approx(0.75));
  // large logits stay finite
  const Vec big = softmax_tempered(Vec{1000.0, 999.0});
  CHECK(all_finite(big));
  CHECK(big[0] + big[1] == doctest::Approx(1.0));
}

TEST_CASE("softmax, relu and mse backward match finite differences") {
  Rng rng(12);
  double worst = 0.0;
  for (int trial = 0; trial < 150; ++trial) {
    const std::size_t n = 2 + rng.below(6);
    const double tau = 0.3 + 2.0 * rng.uniform();
    const Vec up = random_vec(rng, n);
    const Vec z = random_vec(rng, n, 2.0);
    auto sm = [&](std::span<const double> v) { return dot(up, softmax_tempered(v, tau)); };
    worst = std::max(worst, finite_diff_check(sm, z, softmax_backward(softmax_tempered(z, tau), up, tau)));

    Vec r = random_vec(rng, n);
    for (double& v : r) v += v > 0 ? 0.05 : -0.05;  // stay clear of the kink
    auto rl = [&](std::span<const double> v) { return dot(up, relu_forward(v)); };
    worst = std::max(worst, finite_diff_check(rl, r, relu_backward(r, up)));

    const Vec target = random_vec(rng, n);
    auto ml = [&](std::span<const double> v) { return mse_loss(v, target); };
    worst = std::max(worst, finite_diff_check(ml, z, mse_backward(z, target)));
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("embedding backward touches only the looked-up row") {
  const Vec table{1, 2, 3, 4, 5, 6};
  CHECK(embedding_lookup(table, 2, 1) == Vec{3, 4});
  Vec grad(6, 0.0);
  embedding_backward(grad, 2, 2, Vec{1, -1}, 0.5);
  CHECK(grad == Vec{0, 0, 0, 0, 0.5, -0.5});
  CHECK_THROWS(embedding_lookup(table, 2, 3));
}

TEST_CASE("param store layout, flat views and round trip") {
  ParamStore p;
  p.add("a", {2, 3}, 1.0);
  p.add("b", {4});
  CHECK(p.num_params() == 10);
  CHECK(p.offset("b") == 6);
  Vec flat(10);
  for (std::size_t i = 0; i < flat.size(); ++i) flat[i] = 0.1 * static_cast<double>(i) + 1.0 / 3.0;
  p.set_flat_values(flat);
  CHECK(p.flat_values() == flat);
  CHECK(p.value("b")[0] == flat[6]);
  p.metadata()["kind"] = "test";
  CHECK_THROWS_AS(p.add("a", {1}), StateError);
  CHECK_THROWS_AS(p.set_flat_values(Vec(3)), ShapeError);

  modnas::testing::TempDir dir("params");
  p.save(dir / "p.json");
  const ParamStore q = ParamStore::load(dir / "p.json");
  CHECK(q.flat_values() == flat);  // bit-exact through text
  CHECK(q.metadata().at("kind") == "test");
  CHECK(q.block("a").shape == std::vector<std::size_t>{2, 3});
  CHECK_THROWS_AS(ParamStore::load(dir / "missing.json"), IoError);
}

TEST_CASE("Adam first step moves every coordinate by the learning rate") {
  ParamStore p;
  p.add("w", {3}, 1.0);
  Adam adam(3, {.lr = 0.1, .weight_decay = 0.0});
  adam.step(p, Vec{2.0, -0.5, 1e-3});
  CHECK(p.value("w")[0] == doctest::Approx(0.9).epsilon(1e-6));
  CHECK(p.value("w")[1] == doctest::Approx(1.1).epsilon(1e-6));
  CHECK(p.value("w")[2] == doctest::Approx(0.9).epsilon(1e-4));
  CHECK(adam.steps_taken() == 1);
}

TEST_CASE("coupled and decoupled weight decay") {
  ParamStore coupled, decoupled;
  coupled.add("w", {1}, 2.0);
  decoupled.add("w", {1}, 2.0);
  Adam a(1, {.lr = 0.1, .weight_decay = 0.5});
  Adam b(1, {.lr = 0.1, .weight_decay = 0.5, .decoupled = true});
  a.step(coupled, Vec{0.0});
  b.step(decoupled, Vec{0.0});
  // coupled: the decay term is the whole (normalized) gradient
  CHECK(coupled.value("w")[0] == doctest::Approx(1.9).epsilon(1e-6));
  // decoupled: plain shrinkage, the moment estimates stay zero
  CHECK(decoupled.value("w")[0] == doctest::Approx(2.0 * (1.0 - 0.05)));
}

TEST_CASE("sgd step") {
  ParamStore p;
  p.add("w", {2}, 1.0);
  sgd_step(p, Vec{1.0, -2.0}, 0.5);
  CHECK(p.flat_values() == Vec{0.5, 2.0});
}

TEST_CASE("gradient checker flags wrong gradients and non-finite values") {
  auto f = [](std::span<const double> x) { return x[0] * x[0] + 3.0 * x[1]; };
  CHECK(finite_diff_check(f, Vec{1.0, 2.0}, Vec{2.0, 3.0}) < 1e-8);
  CHECK(finite_diff_check(f, Vec{1.0, 2.0}, Vec{2.0, 4.0}) > 0.1);
  GradCheckOptions only_first;
  only_first.coords = {0};
  CHECK(finite_diff_check(f, Vec{1.0, 2.0}, Vec{2.0, 4.0}, only_first) < 1e-8);
  auto bad = [](std::span<const double> x) { return std::log(x[0]); };
  CHECK_THROWS_AS(finite_diff_check(bad, Vec{-1.0}, Vec{0.0}), EvaluationError);

  ParamStore p;
  p.add("w", {2}, 0.5);
  auto g = [](const ParamStore& s) { return s.value("w")[0] * s.value("w")[1]; };
  CHECK(finite_diff_check(g, p, Vec{0.5, 0.5}) < 1e-8);
  CHECK(p.flat_values() == Vec{0.5, 0.5});  // restored
}

TEST_CASE("rng determinism and substreams") {
  Rng a(5), b(5);
  for (int i = 0; i < 10; ++i) CHECK(a.uniform() == b.uniform());
  Rng s1 = Rng::substream(5, {1, 2, 3});
  Rng s2 = Rng::substream(5, {1, 2, 3});
  Rng s3 = Rng::substream(5, {1, 2, 4});
  const double v1 = s1.uniform();
  CHECK(v1 == s2.uniform());
  CHECK(v1 != s3.uniform());
  for (int i = 0; i < 1000; ++i) {
    const auto k = a.below(7);
    CHECK(k < 7);
    const double u = a.uniform_open();
    CHECK(u > 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("gamma draws have the right mean") {
  Rng rng(9);
  for (double shape : {0.3, 1.0, 4.5}) {
    const int n = 100000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += rng.gamma(shape);
    // Gamma(k, 1) has mean k and variance k
    CHECK(std::abs(sum / n - shape) < 4.0 * std::sqrt(shape / n));
  }
}

TEST_CASE("sha256 reference digests") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

}  // TEST_SUITE
