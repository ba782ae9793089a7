#include <doctest.h>

#include <cmath>
#include <numeric>
#include <set>

#include "oracles.hpp"
#include "pizero/error.hpp"
#include "pizero/nn.hpp"
#include "pizero/param_layout.hpp"
#include "pizero/rng.hpp"

using namespace pizero;

TEST_CASE("philox known answers") {
  using C = std::array<std::uint32_t, 4>;
  using K = std::array<std::uint32_t, 2>;
  CHECK(philox4x32(C{0, 0, 0, 0}, K{0, 0}) == C{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(philox4x32(C{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, K{0xffffffff, 0xffffffff}) ==
        C{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(philox4x32(C{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, K{0xa4093822, 0x299f31d0}) ==
        C{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("gaussian stream moments") {
  const auto z = nn::seeded_gaussian(7, 3, 100000);
  const double m = std::accumulate(z.begin(), z.end(), 0.0) / z.size();
  double v = 0.0;
  for (double x : z) v += (x - m) * (x - m);
  v /= z.size();
  CHECK(std::abs(m) < 0.02);
  CHECK(std::abs(v - 1.0) < 0.02);
}

TEST_CASE("fill_gaussian is random access") {
  std::vector<double> all(101);
  fill_gaussian(11, 5, 0, all);
  for (std::size_t off : {0u, 1u, 2u, 7u, 50u}) {
    std::vector<double> part(13);
    fill_gaussian(11, 5, off, part);
    for (std::size_t i = 0; i < part.size(); ++i) CHECK(part[i] == all[off + i]);
  }
  std::vector<double> other(101);
  fill_gaussian(11, 6, 0, other);
  CHECK(other != all);
}

TEST_CASE("rng ranges and determinism") {
  Rng a(3, 4), b(3, 4);
  std::set<std::size_t> seen;
  for (int i = 0; i < 2000; ++i) {
    const auto x = a.below(7);
    CHECK(x == b.below(7));
    CHECK(x < 7);
    seen.insert(x);
    const double u = a.uniform();
    CHECK(u == b.uniform());
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  CHECK(seen.size() == 7);
  CHECK(Rng(3, 4).next_u64() != Rng(3, 5).next_u64());
}

TEST_CASE("mlp matches the reference") {
  for (std::size_t layers : {0u, 1u, 2u}) {
    nn::MlpSpec spec{5, layers, 7, 3, nn::Activation::tanh};
    const auto p = nn::seeded_gaussian(1, layers, spec.param_count());
    const auto x = nn::seeded_gaussian(2, layers, 5);
    const auto got = nn::mlp_forward(p, spec, x);
    const auto want = oracle::mlp(p, 5, layers, 7, 3, x);
    REQUIRE(got.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
  }
}

TEST_CASE("mlp param count") {
  nn::MlpSpec spec{4, 1, 64, 5, nn::Activation::tanh};
  CHECK(spec.param_count() == 4 * 64 + 64 + 64 * 5 + 5);
  spec.hidden_layers = 0;
  CHECK(spec.param_count() == 4 * 5 + 5);
}

TEST_CASE("gru matches the reference") {
  nn::GruSpec spec{3, 6};
  CHECK(spec.param_count() == 3 * 6 * 3 + 3 * 6 * 6 + 3 * 6);
  for (int trial = 0; trial < 5; ++trial) {
    const auto p = nn::seeded_gaussian(9, trial, spec.param_count());
    const auto h = nn::seeded_gaussian(10, trial, 6);
    const auto x = nn::seeded_gaussian(11, trial, 3);
    const auto got = nn::gru_forward(p, spec, h, x);
    const auto want = oracle::gru(p, 3, 6, h, x);
    for (std::size_t i = 0; i < 6; ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
  }
}

TEST_CASE("zero parameters") {
  nn::GruSpec spec{2, 4};
  const std::vector<double> p(spec.param_count(), 0.0);
  const std::vector<double> h{1.0, -2.0, 0.5, 0.0};
  // z = 0.5 and the candidate is 0, so h halves
  const auto out = nn::gru_forward(p, spec, h, std::vector<double>{3.0, 4.0});
  for (std::size_t i = 0; i < 4; ++i) CHECK(out[i] == 0.5 * h[i]);
  nn::MlpSpec mlp{3, 1, 8, 2, nn::Activation::tanh};
  const auto y = nn::mlp_forward(std::vector<double>(mlp.param_count(), 0.0), mlp,
                                 std::vector<double>{1, 2, 3});
  CHECK(y == std::vector<double>{0.0, 0.0});
}

TEST_CASE("softmax, argmax, one_hot") {
  const auto p = nn::softmax(std::vector<double>{1000.0, 1000.0, -1000.0});
  CHECK(p[0] == doctest::Approx(0.5));
  CHECK(p[2] == doctest::Approx(0.0));
  CHECK(std::accumulate(p.begin(), p.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(nn::argmax(std::vector<double>{1.0, 3.0, 3.0}) == 1);
  CHECK(nn::argmax(std::vector<double>{0.0, 0.0}) == 0);
  CHECK(nn::one_hot(2, 4) == std::vector<double>{0, 0, 1, 0});
  CHECK_THROWS_AS(nn::one_hot(4, 4), ConfigError);
  CHECK(nn::sigmoid(0.0) == 0.5);
}

TEST_CASE("wrong parameter length is rejected") {
  nn::MlpSpec spec{2, 1, 3, 1, nn::Activation::tanh};
  CHECK_THROWS(nn::mlp_forward(std::vector<double>(spec.param_count() - 1), spec,
                               std::vector<double>{1, 2}));
  CHECK_THROWS(nn::mlp_forward(std::vector<double>(spec.param_count()), spec,
                               std::vector<double>{1}));
}

TEST_CASE("param layout windows are contiguous") {
  ParamLayout layout;
  CHECK(layout.add("a", 3, "x") == 0);
  CHECK(layout.add("b", 5, "y") == 3);
  CHECK(layout.total_size() == 8);
  CHECK(layout.contains("b"));
  CHECK_FALSE(layout.contains("c"));
  CHECK_THROWS(layout.add("a", 1, "dup"));
  ParamVector v{std::make_shared<ParamLayout>(layout), std::vector<double>(8)};
  v.component("b")[0] = 42.0;
  CHECK(v.values[3] == 42.0);
}
