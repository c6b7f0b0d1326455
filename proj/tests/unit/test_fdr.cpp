#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "rcd/fdr.hpp"

using namespace rcd;

TEST_CASE("Benjamini-Hochberg hand examples") {
  CHECK(qvalues(std::vector<double>{0.01, 0.02, 0.03, 0.04}, FdrMethod::bh) ==
        std::vector<double>{0.04, 0.04, 0.04, 0.04});
  CHECK(qvalues(std::vector<double>{0.05}, FdrMethod::bh) == std::vector<double>{0.05});
  CHECK(qvalues(std::vector<double>{1.0, 1.0, 1.0}, FdrMethod::storey) == std::vector<double>{1.0, 1.0, 1.0});
  CHECK_THROWS(qvalues(std::vector<double>{}, FdrMethod::bh));
  CHECK_THROWS(qvalues(std::vector<double>{1.5}, FdrMethod::bh));
}

TEST_CASE("step-up q-values against a direct minimum") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u;
  std::vector<double> p(300);
  for (auto& v : p) v = std::pow(u(rng), 2.0);
  const double pi0 = estimate_pi0(p);
  const auto q = qvalues(p, FdrMethod::storey);
  std::vector<double> sorted = p;
  std::sort(sorted.begin(), sorted.end());
  const double m = static_cast<double>(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    // q(p_i) = min over p_(k) >= p_i of pi0 m p_(k) / k, capped at 1
    double best = 1.0;
    for (std::size_t k = 0; k < sorted.size(); ++k) {
      if (sorted[k] >= p[i]) best = std::min(best, pi0 * m * sorted[k] / static_cast<double>(k + 1));
    }
    CHECK(q[i] == doctest::Approx(best).epsilon(1e-12));
  }
  std::vector<std::size_t> order(p.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return p[a] < p[b]; });
  for (std::size_t k = 1; k < order.size(); ++k) CHECK(q[order[k - 1]] <= q[order[k]]);
}

TEST_CASE("Storey null proportion") {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u;
  std::vector<double> p(10000);
  for (auto& v : p) v = u(rng);
  const double pi0 = estimate_pi0(p);
  CHECK(pi0 >= 0.9);
  CHECK(pi0 <= 1.0);
  const std::vector<double> tiny{0.001, 0.002, 0.003};
  CHECK(estimate_pi0(tiny) > 0.0);
  CHECK(parse_fdr_method("bh") == FdrMethod::bh);
  CHECK(parse_fdr_method("storey") == FdrMethod::storey);
  CHECK_THROWS(parse_fdr_method("holm"));
}

TEST_CASE("local fdr is near one on a uniform grid") {
  std::vector<double> p;
  for (int i = 1; i <= 1000; ++i) p.push_back(i / 1000.0);
  const auto r = lfdr(p);
  CHECK_FALSE(r.fallback);
  for (double v : r.lfdr) CHECK(v >= 0.9);
}

TEST_CASE("local fdr shape on a mixture") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u;
  std::normal_distribution<double> shifted(4.0, 1.0);
  std::vector<double> p;
  std::vector<bool> alt;
  for (int i = 0; i < 10000; ++i) {
    // alternatives: one-sided z-test p-values with a mean shift of 4
    const bool is_alt = i < 2000;
    p.push_back(is_alt ? 0.5 * std::erfc(shifted(rng) / std::sqrt(2.0)) : u(rng));
    alt.push_back(is_alt);
  }
  const auto r = lfdr(p);
  std::vector<std::size_t> order(p.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return p[a] < p[b]; });
  for (std::size_t k = 1; k < order.size(); ++k) CHECK(r.lfdr[order[k - 1]] <= r.lfdr[order[k]]);
  CHECK(r.lfdr[order.front()] < r.lfdr[order.back()]);

  std::size_t called = 0, false_calls = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (r.lfdr[i] < 0.1) {
      ++called;
      false_calls += !alt[i];
    }
  }
  REQUIRE(called > 0);
  CHECK(static_cast<double>(false_calls) / static_cast<double>(called) <= 0.2);
}

TEST_CASE("local fdr falls back to q-values for small inputs") {
  const std::vector<double> p{0.01, 0.2, 0.5, 0.9};
  const auto r = lfdr(p);
  CHECK(r.fallback);
  CHECK_FALSE(r.warning.empty());
  CHECK(r.lfdr == qvalues(p, FdrMethod::storey));
}
