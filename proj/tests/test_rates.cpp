#include <doctest.h>

#include <cmath>
#include <numeric>

#include "zrp/errors.hpp"
#include "zrp/measures.hpp"
#include "zrp/rates.hpp"
#include "zrp/rng.hpp"

using namespace zrp;

namespace {

// Brute-force series with an explicit factorial product, summed far past the
// point where terms matter.
struct Series {
  double z = 0, m = 0;
};
Series brute_series(const RateFunction& g, double lambda, int terms = 20000) {
  Series s;
  double w = 1.0;
  for (int n = 0; n < terms; ++n) {
    if (n > 0) w *= lambda / g(static_cast<std::int64_t>(n));
    s.z += w;
    s.m += n * w;
  }
  s.m /= s.z;
  return s;
}

RateFunction half_then_one() { return RateFunction::tabulated({0.5}); }

}  // namespace

TEST_CASE("partition function closed forms") {
  const auto g = RateFunction::constant();
  CHECK(partition_function(g, 0.0) == 1.0);
  CHECK(std::abs(partition_function(g, 0.5) - 2.0) < 1e-12);
  CHECK(std::abs(partition_function(half_then_one(), 0.5) - 3.0) < 1e-12);
  CHECK_THROWS_AS(partition_function(g, 1.0), DomainError);
  CHECK_THROWS_AS(partition_function(g, -0.1), DomainError);
}

TEST_CASE("mean density closed forms") {
  const auto g = RateFunction::constant();
  CHECK(mean_density(g, 0.0) == 0.0);
  CHECK(mean_density(half_then_one(), 0.0) == 0.0);
  CHECK(std::abs(mean_density(g, 0.5) - 1.0) < 1e-12);
  CHECK(std::abs(mean_density(g, 0.8) - 4.0) < 1e-12);
  CHECK(std::abs(density_variance(g, 0.5) - 2.0) < 1e-12);
}

TEST_CASE("tabulated rates match brute-force series") {
  const std::vector<RateFunction> gs = {RateFunction::tabulated({0.2, 0.5, 0.5, 0.9}),
                                        RateFunction::ramp(3), half_then_one()};
  for (const auto& g : gs) {
    for (double lambda : {0.1, 0.4, 0.7, 0.9}) {
      const auto s = brute_series(g, lambda);
      CHECK(partition_function(g, lambda) == doctest::Approx(s.z).epsilon(1e-11));
      CHECK(mean_density(g, lambda) == doctest::Approx(s.m).epsilon(1e-11));
    }
  }
}

TEST_CASE("rate function validation") {
  CHECK_THROWS_AS(RateFunction::tabulated({0.5, 0.4}), ConfigError);
  CHECK_THROWS_AS(RateFunction::tabulated({0.0, 0.4}), ConfigError);
  CHECK_THROWS_AS(RateFunction::tabulated({0.5, 1.2}), ConfigError);
  // increments 0.5, 0.4, 0.1 are fine; 0.1, 0.5 are not
  CHECK_NOTHROW(RateFunction::concave({0.5, 0.9}));
  CHECK_THROWS_AS(RateFunction::concave({0.1, 0.6}), ConfigError);
  const auto g = RateFunction::ramp(4);
  CHECK(g(0) == 0.0);
  CHECK(g(2) == 0.5);
  CHECK(g(10) == 1.0);
  CHECK(g(Occupancy::infinite()) == 1.0);
}

TEST_CASE("rate function json round trip") {
  const auto g = RateFunction::concave({0.25, 0.5, 0.75});
  const auto back = RateFunction::from_json(g.to_json());
  CHECK(back.kind() == RateKind::concave);
  CHECK(back(2) == 0.5);
  CHECK(g.to_json()["kind"] == "concave");
}

TEST_CASE("inversion sampler") {
  const auto g = RateFunction::constant();
  CHECK(sample_theta(g, 0.5, 0.4) == 0);
  CHECK(sample_theta(g, 0.5, 0.6) == 1);
  CHECK(sample_theta(g, 0.0, 0.999) == 0);
  // F(0) = 0.5 exactly: the left-continuous inverse stays at 0
  CHECK(sample_theta(g, 0.5, 0.5) == 0);
  CHECK_THROWS_AS(sample_theta(g, 0.5, 0.0), DomainError);
  CHECK_THROWS_AS(sample_theta(g, 0.5, 1.0), DomainError);
  // far tail is served by the geometric remainder
  const SingleSiteLaw law(g, 0.5);
  CHECK(law.quantile(1.0 - 1e-15) == static_cast<std::int64_t>(std::ceil(std::log2(1e15))) - 1);
}

TEST_CASE("pmf normalization and stochastic order on the test grid") {
  for (const auto& g : {RateFunction::constant(), RateFunction::ramp(3), half_then_one()}) {
    std::vector<SingleSiteLaw> laws;
    for (int k = 0; k <= 9; ++k) laws.emplace_back(g, 0.1 * k);
    for (const auto& law : laws) {
      const double s = std::accumulate(law.pmf().begin(), law.pmf().end(), 0.0);
      CHECK(s <= 1.0 + 1e-12);
      CHECK(s >= 1.0 - SingleSiteLaw::kTailTolerance * 10);
    }
    for (std::size_t k = 1; k < laws.size(); ++k)
      for (std::int64_t n = 0; n < 50; ++n) CHECK(laws[k - 1].cdf(n) >= laws[k].cdf(n) - 1e-15);
    for (std::size_t k = 1; k < laws.size(); ++k) CHECK(laws[k - 1].mean() < laws[k].mean());
  }
}

TEST_CASE("sampled mean and rate identity") {
  const auto g = RateFunction::ramp(2);
  const double alpha = 0.8;
  const double lambda = 0.6;
  const SingleSiteLaw law(g, lambda / alpha);
  Rng rng(derive_seed(7, 0, StreamTag::initial));
  const int n = 100000;
  double s = 0, s2 = 0, r = 0, r2 = 0;
  for (int i = 0; i < n; ++i) {
    const auto k = law.quantile(rng.uniform());
    s += k;
    s2 += double(k) * k;
    const double rate = alpha * g(k);
    r += rate;
    r2 += rate * rate;
  }
  const double mean = s / n;
  const double se = std::sqrt((s2 / n - mean * mean) / n);
  CHECK(std::abs(mean - law.mean()) < 4 * se);
  const double rm = r / n;
  const double rse = std::sqrt((r2 / n - rm * rm) / n);
  CHECK(std::abs(rm - lambda) < 4 * rse);
}

TEST_CASE("product measure sampling") {
  const auto g = RateFunction::constant();
  const auto env = Environment::constant(0.5, {0, 2}, 0.8);
  const std::vector<double> u = {0.4, 0.6, 0.9};
  const auto c = sample_product_measure(env, g, 0.4, u);
  CHECK(c[0].count() == 0);
  CHECK(c[1].count() == 1);
  CHECK(c[2].count() == 3);
  const auto empty = sample_product_measure(env, g, 0.0, u);
  CHECK(empty.total_mass() == 0);
  CHECK_THROWS_AS(sample_product_measure(env, g, 0.51, u), DomainError);

  Rng rng(3);
  const auto field = uniform_field(rng, 3);
  const auto lo = sample_product_measure(env, g, 0.2, field);
  const auto hi = sample_product_measure(env, g, 0.4, field);
  CHECK(dominated(lo, hi));
}
