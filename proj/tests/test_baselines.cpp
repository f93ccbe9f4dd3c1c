#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <map>
#include <set>

#include "mlmcgrad/baselines.hpp"

using namespace mlmc;
using namespace mlmc::baselines;

namespace {

// all k-subsets of {0..d-1}, for the enumeration oracles
void subsets(std::size_t d, std::size_t k, std::vector<std::size_t>& cur,
             std::size_t start, std::vector<std::vector<std::size_t>>& out) {
  if (cur.size() == k) {
    out.push_back(cur);
    return;
  }
  for (std::size_t i = start; i < d; ++i) {
    cur.push_back(i);
    subsets(d, k, cur, i + 1, out);
    cur.pop_back();
  }
}

std::vector<std::vector<std::size_t>> all_subsets(std::size_t d, std::size_t k) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> cur;
  subsets(d, k, cur, 0, out);
  return out;
}

}  // namespace

TEST_CASE("rand_k: k=d is the identity") {
  Rng rng(1, 0, 0, Stream::kBaseline);
  Vector v{1.5, -2.5, 3.5};
  CHECK(rand_k(v, 3, rng) == v);
}

TEST_CASE("rand_k: scaling example") {
  Vector v{4, -3};
  Rng rng(2, 0, 0, Stream::kBaseline);
  bool saw_first = false, saw_second = false;
  for (int i = 0; i < 200; ++i) {
    Vector out = rand_k(v, 1, rng);
    if (out[0] != 0.0) {
      CHECK(out == Vector{8, 0});
      saw_first = true;
    } else {
      CHECK(out == Vector{0, -6});
      saw_second = true;
    }
  }
  CHECK(saw_first);
  CHECK(saw_second);
}

TEST_CASE("rand_k: subsets are uniform and outputs unbiased (d=2, k=1)") {
  Vector v{4, -3};
  Rng rng(3, 0, 0, Stream::kBaseline);
  const int n = 100000;
  int first = 0;
  Vector mean(2, 0.0);
  for (int i = 0; i < n; ++i) {
    Vector out = rand_k(v, 1, rng);
    if (out[0] != 0.0) ++first;
    mean[0] += out[0] / n;
    mean[1] += out[1] / n;
  }
  double freq = double(first) / n;
  CHECK(freq > 0.49);  // 6 sigma band around 1/2
  CHECK(freq < 0.51);
  CHECK(mean[0] == doctest::Approx(4.0).epsilon(0.02));
  CHECK(mean[1] == doctest::Approx(-3.0).epsilon(0.02));
}

TEST_CASE("rand_k: exhaustive subset enumeration is unbiased, d<=4") {
  Vector v{4, -3, 2, -1};
  for (std::size_t k = 1; k <= 4; ++k) {
    auto subs = all_subsets(4, k);
    Vector mean(4, 0.0);
    for (const auto& sub : subs) {
      for (std::size_t idx : sub) {
        mean[idx] += v[idx] * (4.0 / double(k)) / double(subs.size());
      }
    }
    for (std::size_t j = 0; j < 4; ++j) {
      CHECK(mean[j] == doctest::Approx(v[j]).epsilon(1e-12));
    }
  }
}

TEST_CASE("rand_k: analytic variance matches subset enumeration") {
  Vector v{1, -1, 1, 1, -1, 1};  // uniform magnitudes
  for (std::size_t k : {1, 2, 3, 5}) {
    auto subs = all_subsets(v.size(), k);
    double var = 0.0;
    for (const auto& sub : subs) {
      Vector out(v.size(), 0.0);
      for (std::size_t idx : sub) out[idx] = v[idx] * double(v.size()) / k;
      double sq = 0.0;
      for (std::size_t j = 0; j < v.size(); ++j) {
        sq += (out[j] - v[j]) * (out[j] - v[j]);
      }
      var += sq / double(subs.size());
    }
    CHECK(rand_k_variance(v, k) == doctest::Approx(var).epsilon(1e-9));
    CHECK(rand_k_variance(v, k) ==
          doctest::Approx((6.0 / k - 1.0) * 6.0).epsilon(1e-12));
  }
}

TEST_CASE("rand_k: every draw has exactly k nonzeros") {
  Rng rng(4, 0, 0, Stream::kBaseline);
  Vector v{1, 2, 3, 4, 5, 6, 7};
  for (std::size_t k = 1; k <= 7; ++k) {
    for (int i = 0; i < 50; ++i) {
      Vector out = rand_k(v, k, rng);
      std::size_t nz = 0;
      for (double x : out) nz += x != 0.0;
      CHECK(nz == k);
    }
  }
  CHECK_THROWS_AS(rand_k(v, 0, rng), std::out_of_range);
  CHECK_THROWS_AS(rand_k(v, 8, rng), std::out_of_range);
}

TEST_CASE("qsgd: grid points are deterministic") {
  Rng rng(5, 0, 0, Stream::kBaseline);
  // d=1: the entry sits on the top grid point
  auto r = qsgd_quantize({0.5}, 2, rng);
  CHECK(r.values == Vector{0.5});
  CHECK(r.bit_cost == 1 * (1 + 1) + 64);

  // entries on interior grid points
  Vector v{3.0, 4.0};  // norm 5, normalized {0.6, 0.8}
  auto r5 = qsgd_quantize(v, 6, rng);  // grid step 0.2
  CHECK(r5.values[0] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(r5.values[1] == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("qsgd: stochastic rounding is unbiased (full outcome enumeration)") {
  Vector v{3, 4};  // norm 5
  // with 2 levels the grid is {0, 1}: normalized magnitudes 0.6 and 0.8
  // round up with those probabilities; enumerate all four outcomes
  double p0 = 0.6, p1 = 0.8;
  Vector mean(2, 0.0);
  for (int b0 : {0, 1}) {
    for (int b1 : {0, 1}) {
      double prob = (b0 ? p0 : 1 - p0) * (b1 ? p1 : 1 - p1);
      mean[0] += prob * (b0 ? 5.0 : 0.0);
      mean[1] += prob * (b1 ? 5.0 : 0.0);
    }
  }
  CHECK(mean[0] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(mean[1] == doctest::Approx(4.0).epsilon(1e-12));

  // and the sampler concentrates on the same expectation
  Rng rng(6, 0, 0, Stream::kBaseline);
  Vector sampled(2, 0.0);
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    auto out = qsgd_quantize(v, 2, rng);
    sampled[0] += out.values[0] / n;
    sampled[1] += out.values[1] / n;
    CHECK((out.values[0] == 0.0 || out.values[0] == 5.0));
  }
  CHECK(sampled[0] == doctest::Approx(3.0).epsilon(0.01));
  CHECK(sampled[1] == doctest::Approx(4.0).epsilon(0.01));
}

TEST_CASE("qsgd: zero vector yields a zero message") {
  Rng rng(7, 0, 0, Stream::kBaseline);
  auto r = qsgd_quantize({0, 0, 0}, 2, rng);
  CHECK(r.values == Vector{0, 0, 0});
  CHECK(r.bit_cost == 64);
}

TEST_CASE("qsgd: bit accounting") {
  Rng rng(8, 0, 0, Stream::kBaseline);
  Vector v(100, 0.5);
  CHECK(qsgd_quantize(v, 2, rng).bit_cost == 100 * 2 + 64);
  CHECK(qsgd_quantize(v, 4, rng).bit_cost == 100 * 3 + 64);
  CHECK_THROWS_AS(qsgd_quantize(v, 1, rng), std::invalid_argument);
}

TEST_CASE("ef momentum: identity compressor keeps mirror equal to momentum") {
  IdentityCompressor id;
  ErrorFeedbackState state(3, 0.9);
  Rng rng(9, 0, 0, Stream::kBaseline);
  for (int t = 0; t < 20; ++t) {
    Vector g{rng.normal(), rng.normal(), rng.normal()};
    ef_momentum_step(state, g, id, 1);
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(state.server_mirror[j] == state.momentum[j]);
    }
  }
}

TEST_CASE("ef momentum: zero gradients decay the state to zero") {
  TopKCompressor topk;
  ErrorFeedbackState state(2, 0.5);
  state.momentum = {1.0, -2.0};
  state.server_mirror = {0.5, -1.0};
  Vector zero{0, 0};
  for (int t = 0; t < 200; ++t) ef_momentum_step(state, zero, topk, 1);
  CHECK(std::abs(state.momentum[0]) < 1e-12);
  CHECK(std::abs(state.momentum[1]) < 1e-12);
  CHECK(std::abs(state.server_mirror[0]) < 1e-10);
  CHECK(std::abs(state.server_mirror[1]) < 1e-10);
}

TEST_CASE("ef momentum: hand-executed golden recursion (Top-1, d=2)") {
  TopKCompressor topk;
  ErrorFeedbackState state(2, 0.5);

  // step 1: g = (1.0, 0.5)
  //   m = 0.5*(1.0, 0.5) = (0.5, 0.25)
  //   c = Top1(m - h) = Top1(0.5, 0.25) = (0.5, 0)
  //   h = (0.5, 0)
  auto s1 = ef_momentum_step(state, {1.0, 0.5}, topk, 1);
  CHECK(state.momentum == Vector{0.5, 0.25});
  CHECK(s1.transmitted == Vector{0.5, 0.0});
  CHECK(state.server_mirror == Vector{0.5, 0.0});
  CHECK(s1.bit_cost == 64 + 1);

  // step 2: g = (0.25, 1.0)
  //   m = 0.5*(0.5, 0.25) + 0.5*(0.25, 1.0) = (0.375, 0.625)
  //   c = Top1(m - h) = Top1(-0.125, 0.625) = (0, 0.625)
  //   h = (0.5, 0.625)
  auto s2 = ef_momentum_step(state, {0.25, 1.0}, topk, 1);
  CHECK(state.momentum == Vector{0.375, 0.625});
  CHECK(s2.transmitted == Vector{0.0, 0.625});
  CHECK(state.server_mirror == Vector{0.5, 0.625});
}
