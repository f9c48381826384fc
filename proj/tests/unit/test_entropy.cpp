#include <cmath>
#include <random>

#include <doctest.h>

#include "infodensity/entropy.hpp"
#include "oracles.hpp"

using namespace infodensity;

namespace {

TokenDistribution dist(std::vector<double> probs, double tail = 0.0) {
  TokenDistribution d;
  for (std::size_t i = 0; i < probs.size(); ++i) d.entries.push_back({"tok" + std::to_string(i), probs[i]});
  d.tail_mass = tail;
  return d;
}

std::vector<double> random_simplex(std::mt19937_64& rng, std::size_t n) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> p(n);
  double s = 0.0;
  for (auto& x : p) s += (x = e(rng));
  for (auto& x : p) x /= s;
  return p;
}

}  // namespace

TEST_SUITE("entropy") {
  TEST_CASE("closed-form and frozen entropies") {
    CHECK(distribution_entropy(dist({0.25, 0.25, 0.25, 0.25})) ==
          doctest::Approx(1.386294361119890618).epsilon(1e-14));
    CHECK(distribution_entropy(dist({1.0})) == 0.0);
    // 1.5 ln 2, frozen from a 40-digit evaluation.
    CHECK(distribution_entropy(dist({0.5, 0.25, 0.25})) ==
          doctest::Approx(1.039720770839917964).epsilon(1e-14));
  }

  TEST_CASE("tail bucket is one aggregate symbol") {
    // Top-5 of mass 0.9 plus a 0.1 tail.
    const auto d = dist({0.4, 0.2, 0.15, 0.1, 0.05}, 0.1);
    CHECK(distribution_entropy(d) == doctest::Approx(1.583275505245872983).epsilon(1e-12));
  }

  TEST_CASE("negligible probabilities contribute nothing") {
    const double big = 0.5 - 1e-13;
    const double without_tiny = -0.5 * std::log(0.5) - big * std::log(big);
    // The 1e-13 token alone would add about 3e-12 nats.
    CHECK(std::abs(distribution_entropy(dist({0.5, big, 1e-13})) - without_tiny) <= 1e-15);
  }

  TEST_CASE("invalid distributions are rejected") {
    CHECK_THROWS_AS(distribution_entropy(dist({0.5, 0.4})), InvalidInput);
    CHECK_THROWS_AS(distribution_entropy(dist({1.2, -0.2})), InvalidInput);
    CHECK_THROWS_AS(distribution_entropy(dist({0.5}, -0.5)), InvalidInput);
    TokenDistribution dup;
    dup.entries = {{"a", 0.5}, {"a", 0.5}};
    CHECK_THROWS_AS(distribution_entropy(dup), InvalidInput);
    // Within the 1e-6 rounding allowance.
    CHECK_NOTHROW(distribution_entropy(dist({0.5, 0.5 + 5e-7})));
  }

  TEST_CASE("answer conditional entropy is the mean over positions") {
    AnswerPositionSet one{{dist({0.5, 0.25, 0.25})}};
    CHECK(answer_conditional_entropy(one) == distribution_entropy(one.positions[0]));

    AnswerPositionSet certain{{dist({1.0}), dist({0.0, 1.0})}};
    CHECK(answer_conditional_entropy(certain) == 0.0);

    // ln 4 and ln 2 average to 1.5 ln 2.
    AnswerPositionSet mixed{{dist({0.25, 0.25, 0.25, 0.25}), dist({0.5, 0.5})}};
    CHECK(answer_conditional_entropy(mixed) == doctest::Approx(1.5 * std::log(2.0)));

    CHECK_THROWS_AS(answer_conditional_entropy(AnswerPositionSet{}), InvalidInput);
  }

  TEST_CASE("answer conditional entropy ignores position order") {
    AnswerPositionSet a{{dist({0.25, 0.25, 0.25, 0.25}), dist({0.9, 0.1}), dist({1.0})}};
    AnswerPositionSet b{{a.positions[2], a.positions[0], a.positions[1]}};
    CHECK(answer_conditional_entropy(a) == doctest::Approx(answer_conditional_entropy(b)).epsilon(1e-15));
  }

  TEST_CASE("information gain") {
    CHECK(information_gain(2.0, 2.0) == 0.0);
    CHECK(information_gain(2.0, 0.5) == 1.5);
    CHECK(information_gain(0.5, 2.0) == -1.5);
    CHECK_THROWS_AS(information_gain(NAN, 1.0), InvalidInput);
    CHECK_THROWS_AS(information_gain(1.0, INFINITY), InvalidInput);
  }

  TEST_CASE("information gain telescopes") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 5.0);
    for (int i = 0; i < 200; ++i) {
      const double a = u(rng), b = u(rng), c = u(rng);
      CHECK(information_gain(a, b) + information_gain(b, c) ==
            doctest::Approx(information_gain(a, c)).epsilon(1e-12));
    }
  }

  TEST_CASE("build_trajectory") {
    const auto single = build_trajectory("t", {2.0});
    CHECK(single.steps() == 0);
    const auto three = build_trajectory("t", {2.0, 1.0, 0.0});
    CHECK(three.steps() == 2);
    CHECK(three.values == std::vector<double>{2.0, 1.0, 0.0});
    CHECK_THROWS_AS(build_trajectory("t", {}), InvalidInput);
    CHECK_THROWS_AS(build_trajectory("t", {1.0, -0.1}), InvalidInput);
    CHECK_THROWS_AS(build_trajectory("t", {1.0, NAN}), InvalidInput);
  }

  TEST_CASE("property: entropy is non-negative and matches the brute-force oracle") {
    std::mt19937_64 rng(42);
    std::uniform_int_distribution<std::size_t> width(1, 64);
    for (int i = 0; i < 300; ++i) {
      const auto p = random_simplex(rng, width(rng));
      const double h = distribution_entropy(dist(p));
      CHECK(h >= 0.0);
      const auto ref = oracle::entropy(p);
      CHECK(std::abs(h - static_cast<double>(ref)) <= 1e-10 * std::max(1e-300L, ref));
    }
  }

  TEST_CASE("property: top-k truncation with a tail bucket never exceeds the full entropy") {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 200; ++i) {
      auto p = random_simplex(rng, 32);
      std::sort(p.begin(), p.end(), std::greater<>());
      const auto full = distribution_entropy(dist(p));
      for (std::size_t k : {1u, 3u, 8u, 31u}) {
        std::vector<double> head(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(k));
        double tail = 1.0;
        for (double x : head) tail -= x;
        CHECK(distribution_entropy(dist(head, std::max(0.0, tail))) <= full + 1e-12);
      }
    }
  }

  TEST_CASE("zero entropy only for a one-hot distribution") {
    CHECK(distribution_entropy(dist({0.0, 1.0, 0.0})) == 0.0);
    CHECK(distribution_entropy(dist({0.999, 0.001})) > 0.0);
    CHECK(distribution_entropy(dist({0.999}, 0.001)) > 0.0);
  }
}
