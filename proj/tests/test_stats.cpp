#include <doctest.h>

#include <cmath>

#include "bca_reference.hpp"
#include "pizero/error.hpp"
#include "pizero/rng.hpp"
#include "pizero/stats.hpp"

using namespace pizero;
using namespace pizero::stats;

namespace {

const std::vector<double> kFixture{2.1, -0.4, 3.3, 1.7, 0.2, 5.9, -1.1, 2.8, 0.9, 4.4};

}  // namespace

TEST_CASE("degenerate sample") {
  const auto ci = bca_interval(std::vector<double>(7, 3.0), 0.95, 2000, 1);
  CHECK(ci.low == 3.0);
  CHECK(ci.high == 3.0);
}

TEST_CASE("symmetric sample gives a symmetric interval") {
  const auto ci = bca_interval(std::vector<double>{-1.0, 1.0}, 0.95, 20000, 3);
  CHECK(std::abs(ci.low + ci.high) < 0.05);
  CHECK(ci.low < 0.0);
  CHECK(ci.high > 0.0);
}

TEST_CASE("matches the reference formulas") {
  for (std::uint64_t seed : {0u, 1u, 12345u}) {
    for (double conf : {0.9, 0.95}) {
      const auto got = bca_interval(kFixture, conf, 10000, seed);
      const auto want = reference::bca(kFixture, conf, 10000, seed);
      CHECK(std::abs(got.low - want.low) < 1e-9);
      CHECK(std::abs(got.high - want.high) < 1e-9);
    }
  }
  // skewed data exercises the acceleration term
  const std::vector<double> skewed{0.1, 0.2, 0.1, 0.3, 0.2, 0.1, 5.0, 0.4, 0.2, 9.0};
  const auto got = bca_interval(skewed, 0.95, 10000, 8);
  const auto want = reference::bca(skewed, 0.95, 10000, 8);
  CHECK(std::abs(got.low - want.low) < 1e-9);
  CHECK(std::abs(got.high - want.high) < 1e-9);
}

TEST_CASE("deterministic under a fixed seed") {
  const auto a = bca_interval(kFixture, 0.95, 500, 9);
  const auto b = bca_interval(kFixture, 0.95, 500, 9);
  CHECK(a.low == b.low);
  CHECK(a.high == b.high);
  CHECK(bootstrap_means(kFixture, 50, 9) == bootstrap_means(kFixture, 50, 9));
}

TEST_CASE("interval shrinks with more samples") {
  double small_width = 0.0, large_width = 0.0;
  for (std::uint64_t rep = 0; rep < 40; ++rep) {
    Rng rng(rep, 5);
    std::vector<double> x(80);
    for (auto& v : x) v = rng.normal();
    const auto wide = bca_interval(std::span(x).first(10), 0.95, 1000, rep);
    const auto narrow = bca_interval(x, 0.95, 1000, rep);
    small_width += wide.high - wide.low;
    large_width += narrow.high - narrow.low;
  }
  CHECK(large_width < small_width);
}

TEST_CASE("coverage of normal means") {
  const int reps = 2000;
  int covered = 0;
  for (int rep = 0; rep < reps; ++rep) {
    Rng rng(static_cast<std::uint64_t>(rep), 11);
    std::vector<double> x(20);
    for (auto& v : x) v = rng.normal();
    const auto ci = bca_interval(x, 0.95, 1000, static_cast<std::uint64_t>(rep));
    covered += ci.low <= 0.0 && 0.0 <= ci.high;
  }
  const double rate = covered / double(reps);
  MESSAGE("coverage " << rate);
  CHECK(std::abs(rate - 0.95) <= 0.03);
}

TEST_CASE("summaries") {
  const auto p = summarize(4, {1.0, 2.0, 6.0}, 0.95, 2000, 1);
  CHECK(p.generation == 4);
  CHECK(p.mean == 3.0);
  CHECK(p.ci_low <= p.mean);
  CHECK(p.mean <= p.ci_high);
  CHECK(p.trial_scores.size() == 3);
  const auto one = summarize(0, {2.5}, 0.95, 2000, 1);
  CHECK(one.ci_low == 2.5);
  CHECK(one.ci_high == 2.5);
  CHECK_THROWS_AS(bca_interval(std::vector<double>{1.0}, 0.95, 100, 1), ConfigError);
  CHECK_THROWS_AS(bca_interval(kFixture, 1.0, 100, 1), ConfigError);
}
