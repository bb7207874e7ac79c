#include <doctest.h>

#include <algorithm>

#include "modnas/archspace.hpp"
#include "modnas/benchmark.hpp"
#include "modnas/errors.hpp"
#include "modnas/gradcheck.hpp"
#include "modnas/pareto.hpp"
#include "test_util.hpp"

using namespace modnas;
using modnas::testing::uniform_vec;

namespace {

// value(x) = sum_c table[c] prod_d x_d[c_d], by enumerating every configuration
double multilinear_oracle(const ArchSpace& space, const Vec& table, const Vec& x) {
  double total = 0.0;
  for (std::uint64_t i = 0; i < space.total_configs(); ++i) {
    const ArchConfig c = space.config_at(i);
    double w = table[i];
    for (std::size_t d = 0; d < space.dims(); ++d) w *= x[space.offset(d) + c.choices[d]];
    total += w;
  }
  return total;
}

bool dominated_by_any(const Vec& p, const std::vector<Vec>& pts) {
  for (const auto& q : pts) {
    bool le = true, lt = false;
    for (std::size_t k = 0; k < p.size(); ++k) {
      le = le && q[k] <= p[k];
      lt = lt || q[k] < p[k];
    }
    if (le && lt) return true;
  }
  return false;
}

}  // namespace

TEST_SUITE("archspace") {

TEST_CASE("index and configuration are inverse bijections") {
  const ArchSpace space({3, 2, 4});
  CHECK(space.total_configs() == 24);
  CHECK(space.encoding_size() == 9);
  CHECK(space.offset(2) == 5);
  std::vector<bool> seen(24, false);
  for (std::uint64_t i = 0; i < 24; ++i) {
    const ArchConfig c = space.config_at(i);
    CHECK(space.index_of(c) == i);
    seen[i] = true;
    const Vec e = space.encode(c);
    CHECK(std::count(e.begin(), e.end(), 1.0) == 3);
    CHECK(space.decode(e).choices == c.choices);
  }
  CHECK(std::all_of(seen.begin(), seen.end(), [](bool b) { return b; }));
  CHECK_THROWS_AS(space.config_at(24), IndexError);
  CHECK_THROWS_AS(space.validate(ArchConfig{{0, 2, 0}}), IndexError);
  CHECK_THROWS_AS(space.validate(ArchConfig{{0, 0}}), ShapeError);
  CHECK_THROWS_AS(ArchSpace({3, 1}), ParameterError);
}

TEST_CASE("decode takes the first maximum") {
  const ArchSpace space({3});
  CHECK(space.decode(Vec{0.2, 0.5, 0.5}).choices[0] == 1);
}

TEST_CASE("enumeration cap") {
  const ArchSpace big(std::vector<std::size_t>(7, 10));
  CHECK(big.total_configs() == 10'000'000);
  CHECK_THROWS_AS(big.require_enumerable(), CapacityError);
  const ArchSpace raised(std::vector<std::size_t>(7, 10), 20'000'000);
  CHECK_NOTHROW(raised.require_enumerable());
}

TEST_CASE("descriptor hash identifies the space") {
  CHECK(ArchSpace({4, 4}).descriptor_hash() == ArchSpace({4, 4}).descriptor_hash());
  CHECK(ArchSpace({4, 4}).descriptor_hash() != ArchSpace({4, 3}).descriptor_hash());
  const ArchSpace s({2, 5, 3});
  CHECK(ArchSpace::from_json(s.to_json()) == s);
}

TEST_CASE("multilinear extension hits table entries at vertices") {
  const ArchSpace space({3, 4});
  Rng rng(3);
  const Vec table = uniform_vec(rng, space.total_configs());
  for (std::uint64_t i = 0; i < space.total_configs(); ++i) {
    const auto r = multilinear_eval(space, table, space.encode(space.config_at(i)));
    CHECK(r.value == doctest::Approx(table[i]));
  }
}

TEST_CASE("multilinear value and gradient against enumeration and finite differences") {
  Rng rng(4);
  double worst_value = 0.0, worst_grad = 0.0;
  for (int trial = 0; trial < 120; ++trial) {
    std::vector<std::size_t> choices(1 + rng.below(3));
    for (auto& c : choices) c = 2 + rng.below(3);
    const ArchSpace space(choices);
    const Vec table = uniform_vec(rng, space.total_configs(), -1.0, 1.0);
    const Vec x = uniform_vec(rng, space.encoding_size());
    const auto r = multilinear_eval(space, table, x);
    worst_value = std::max(worst_value, std::abs(r.value - multilinear_oracle(space, table, x)));
    auto f = [&](std::span<const double> v) { return multilinear_eval(space, table, v).value; };
    worst_grad = std::max(worst_grad, finite_diff_check(f, x, r.grad));
  }
  CHECK(worst_value < 1e-12);
  CHECK(worst_grad < 1e-4);
}

TEST_CASE("benchmark generation is deterministic per recipe") {
  BenchmarkRecipe r;
  const Benchmark a = generate_benchmark(r);
  const Benchmark b = generate_benchmark(r);
  CHECK(a.content_hash() == b.content_hash());
  r.seed = 8;
  CHECK(generate_benchmark(r).content_hash() != a.content_hash());
  CHECK(a.train_devices() == std::vector<std::size_t>{0, 1, 2});
  CHECK(a.test_devices() == std::vector<std::size_t>{3, 4});
}

TEST_CASE("benchmark file round trip") {
  BenchmarkRecipe r;
  r.num_objectives = 3;
  const Benchmark a = generate_benchmark(r);
  modnas::testing::TempDir dir("bench");
  a.save(dir / "b.json");
  const Benchmark b = Benchmark::load(dir / "b.json");
  CHECK(b.content_hash() == a.content_hash());
  CHECK(b.objectives(4, 17) == a.objectives(4, 17));
  CHECK_THROWS_AS(Benchmark::load(dir / "none.json"), Error);
}

TEST_CASE("hardware costs grow with capacity and tables are normalized into [0, 1]") {
  const Benchmark b = generate_benchmark({});
  for (const auto& dev : b.devices) {
    const auto& t = b.table(2, dev.id);
    // the all-smallest configuration is the cheapest, the all-largest the most expensive
    CHECK(t.values.front() == doctest::Approx(t.lo));
    CHECK(t.values.back() == doctest::Approx(t.hi));
    for (std::uint64_t c = 0; c < b.space.total_configs(); c += 37) {
      const Vec n = b.normalized_objectives(dev.id, c);
      for (double v : n) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
      }
    }
  }
  CHECK_THROWS_AS(b.table(3, 0), BenchmarkError);
  CHECK_THROWS_AS(b.device(9), BenchmarkError);
}

TEST_CASE("device profiles are per-objective scaled reference costs") {
  BenchmarkRecipe r;
  r.num_objectives = 3;
  const Benchmark b = generate_benchmark(r);
  CHECK(b.reference_configs.size() == r.profile_size);
  for (const auto& p : b.profiles) {
    CHECK(p.features.size() == 2 * r.profile_size);
    for (std::size_t m = 2; m <= 3; ++m) {
      const auto blk = p.objective(m);
      CHECK(*std::max_element(blk.begin(), blk.end()) == doctest::Approx(1.0));
      const auto& t = b.table(m, p.device);
      double ref_max = 0.0;
      for (auto c : b.reference_configs) ref_max = std::max(ref_max, t.values[c]);
      for (std::size_t i = 0; i < blk.size(); ++i) {
        CHECK(blk[i] == doctest::Approx(t.values[b.reference_configs[i]] / ref_max));
      }
    }
  }
}

TEST_CASE("enumerated true front equals brute-force dominance filtering") {
  for (std::size_t M : {2, 3}) {
    BenchmarkRecipe r;
    r.num_objectives = M;
    const Benchmark b = generate_benchmark(r);
    for (const auto& dev : b.devices) {
      std::vector<Vec> all;
      for (std::uint64_t c = 0; c < b.space.total_configs(); ++c) all.push_back(b.normalized_objectives(dev.id, c));
      std::vector<Vec> expect;
      for (const auto& p : all) {
        if (!dominated_by_any(p, all) && std::find(expect.begin(), expect.end(), p) == expect.end()) {
          expect.push_back(p);
        }
      }
      std::sort(expect.begin(), expect.end());
      std::vector<Vec> got = enumerate_true_front(b, dev.id).values();
      std::sort(got.begin(), got.end());
      CHECK(got == expect);
    }
  }
}

TEST_CASE("zero conflict leaves a single Pareto-optimal configuration") {
  BenchmarkRecipe r;
  r.conflict = 0.0;
  const Benchmark b = generate_benchmark(r);
  for (const auto& dev : b.devices) {
    const ParetoFront f = enumerate_true_front(b, dev.id);
    REQUIRE(f.size() == 1);
    CHECK(f.points[0].arch == 0);
  }
}

TEST_CASE("higher conflict gives larger true fronts") {
  BenchmarkRecipe lo, hi;
  lo.conflict = 0.2;
  hi.conflict = 1.0;
  std::size_t n_lo = 0, n_hi = 0;
  const Benchmark a = generate_benchmark(lo), b = generate_benchmark(hi);
  for (std::size_t d = 0; d < 5; ++d) {
    n_lo += enumerate_true_front(a, d).size();
    n_hi += enumerate_true_front(b, d).size();
  }
  CHECK(n_hi > n_lo);
}

TEST_CASE("recipe validation") {
  BenchmarkRecipe r;
  r.conflict = 1.5;
  CHECK_THROWS_AS(generate_benchmark(r), RecipeError);
  r = {};
  r.num_train_devices = 6;
  CHECK_THROWS_AS(generate_benchmark(r), RecipeError);
  r = {};
  r.num_objectives = 1;
  CHECK_THROWS_AS(generate_benchmark(r), RecipeError);
  r = {};
  r.choices = std::vector<std::size_t>(7, 10);
  CHECK_THROWS_AS(generate_benchmark(r), CapacityError);
  CHECK(BenchmarkRecipe::from_json(BenchmarkRecipe{}.to_json()).to_json() == BenchmarkRecipe{}.to_json());
}

}  // TEST_SUITE
