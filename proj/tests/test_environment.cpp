#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "zrp/environment.hpp"
#include "zrp/errors.hpp"

using namespace zrp;

namespace {

const RateLaw kUniform = RateLaw::uniform(0.5, 1.0);

// Closed form of the Q-average of R(lambda/a) = lambda/(a - lambda) for Q
// uniform on (0.5, 1].
double uniform_annealed(double lambda) { return 2.0 * lambda * std::log((1.0 - lambda) / (0.5 - lambda)); }

}  // namespace

TEST_CASE("rate law quantiles") {
  CHECK(kUniform.quantile(0.3) == doctest::Approx(0.65));
  CHECK(kUniform.cdf(0.75) == doctest::Approx(0.5));
  const auto tri = RateLaw::power(0.5, 1.0, 2.0);
  CHECK(tri.cdf(0.75) == doctest::Approx(0.25));
  CHECK(tri.quantile(0.25) == doctest::Approx(0.75));
  const auto atoms = RateLaw::atoms({0.9, 0.6}, {1.0, 3.0});
  CHECK(atoms.quantile(0.75) == 0.6);
  CHECK(atoms.quantile(0.76) == 0.9);
  CHECK(atoms.mean() == doctest::Approx(0.675));
  CHECK_THROWS_AS(RateLaw::atoms({0.5, 0.9}, {1, 1}).check_support(0.5), ConfigError);
  CHECK_NOTHROW(kUniform.check_support(0.5));
  CHECK(RateLaw::from_json(tri.to_json()).kappa() == 2.0);
}

TEST_CASE("iid environments") {
  const Window w{-50, 50};
  const auto point = build_iid_environment(0.5, RateLaw::point(0.9), w, 1);
  CHECK(std::all_of(point.values().begin(), point.values().end(), [](double a) { return a == 0.9; }));

  const std::vector<double> u(3, 0.3);
  const auto fixed = build_iid_environment(0.5, kUniform, {0, 2}, u);
  CHECK(fixed(1) == doctest::Approx(0.65));

  const auto big = build_iid_environment(0.5, kUniform, {0, 9999}, 11);
  double s = 0, s2 = 0;
  for (double a : big.values()) {
    s += a;
    s2 += a * a;
  }
  const double n = static_cast<double>(big.values().size());
  const double mean = s / n;
  const double se = std::sqrt((s2 / n - mean * mean) / n);
  CHECK(std::abs(mean - 0.75) < 4 * se);

  const auto again = build_iid_environment(0.5, kUniform, {0, 9999}, 11);
  CHECK(std::equal(big.values().begin(), big.values().end(), again.values().begin()));
  CHECK_THROWS_AS(build_iid_environment(0.6, kUniform, w, 1), ConfigError);
}

TEST_CASE("environment invariant") {
  CHECK_THROWS_AS(Environment(0.5, {0, 1}, {0.7, 0.5}), InvariantError);
  CHECK_THROWS_AS(Environment(0.5, {0, 1}, {0.7, 1.01}), InvariantError);
  CHECK_NOTHROW(Environment(0.5, {0, 1}, {0.7, 1.0}));
}

TEST_CASE("sparse-defect construction") {
  const auto sched = DefectSchedule::polynomial(2);
  CHECK(sched.point(2) == -4);
  CHECK(sched.point(3) == -9);
  // x_{2,1} = -5, gap 5
  CHECK(defect_level(sched, -5) == doctest::Approx(1.0 / 6.0));
  const auto env = build_sparse_defect_environment(0.5, kUniform, sched, {-10000, 10000});
  CHECK(env(-5) == doctest::Approx(0.5 + 0.5 / 6.0));
  CHECK(env(0) == 1.0);
  // k equal to the gap: x_{2,5} = -9 = x_3
  CHECK(defect_level(sched, -9) == doctest::Approx(5.0 / 6.0));
  for (std::int64_t x = 1; x <= 10000; ++x) {
    REQUIRE(env(x) == env(-x));
    REQUIRE(env(x) < 1.0);
    REQUIRE(env(x) > 0.5);
  }

  // empirical CDF over [-10^4, -1] against F_Q
  std::vector<double> a(env.values().begin(), env.values().begin() + 10000);
  std::sort(a.begin(), a.end());
  double sup = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double f = kUniform.cdf(a[i]);
    sup = std::max({sup, std::abs(f - double(i + 1) / a.size()), std::abs(f - double(i) / a.size())});
  }
  CHECK(sup < 0.05);
}

TEST_CASE("defect schedule validation") {
  CHECK_THROWS_AS(DefectSchedule::polynomial(1), ConfigError);
  CHECK_THROWS_AS(DefectSchedule::explicit_points({0, -3, -4}).validate(-4), ConfigError);
  CHECK_NOTHROW(DefectSchedule::explicit_points({0, -1, -4, -9, -16}).validate(-9));
  const auto short_list = DefectSchedule::explicit_points({0, -1, -4, -9});
  CHECK_THROWS_AS(build_sparse_defect_environment(0.5, kUniform, short_list, {-20, 20}), ConfigError);
  CHECK(DefectSchedule::from_json(DefectSchedule::polynomial(3).to_json()).point(2) == -8);
  const auto listed = DefectSchedule::explicit_points({0, -1, -4, -9, -16});
  CHECK(listed.locate(-5).first == 2);
  CHECK(listed.locate(-5).second == 1);
}

TEST_CASE("slow-site boundaries") {
  std::vector<double> alpha(21, 0.9);
  Window w{-10, 10};
  alpha[w.index(-3)] = 0.5 + 0.005;
  alpha[w.index(5)] = 0.5 + 0.005;
  const Environment env(0.5, w, alpha);
  const auto s = slow_site_boundaries(env, 0.01);
  CHECK(s.left == -3);
  CHECK(s.right == 5);
  const auto all = slow_site_boundaries(env, 0.5);
  CHECK(all.left == 0);
  CHECK(all.right == 0);
  CHECK_THROWS_WITH_AS(slow_site_boundaries(Environment::constant(0.5, w, 0.9), 0.01),
                       doctest::Contains("window too small"), ConfigError);

  const auto sparse = build_sparse_defect_environment(0.5, kUniform, DefectSchedule::polynomial(2), {-2000, 2000});
  const auto b = slow_site_boundaries(sparse, 0.01);
  std::int64_t scan = 0;
  for (std::int64_t x = 0;; --x)
    if (sparse(x) <= 0.51) {
      scan = x;
      break;
    }
  CHECK(b.left == scan);
  CHECK(b.right == -scan);
  CHECK(kUniform.cdf(sparse(b.left)) <= kUniform.cdf(0.51) + 1e-12);
}

TEST_CASE("slow-site density report") {
  const std::vector<double> eps = {0.5, 0.2};
  const std::vector<std::int64_t> ns = {100, 1000, 10000};
  const auto flat = check_slow_site_density(Environment::constant(0.5, {-10000, 10000}, 0.9), eps, ns);
  CHECK_FALSE(flat.all_trending());
  for (const auto& [e, ok] : flat.trends) CHECK_FALSE(ok);

  const auto sparse =
      build_sparse_defect_environment(0.5, kUniform, DefectSchedule::polynomial(2), {-10000, 10000});
  const auto rep = check_slow_site_density(sparse, eps, ns);
  CHECK(rep.all_trending());

  const auto iid = build_iid_environment(0.5, kUniform, {-1000000, 0}, 5);
  const std::vector<double> half = {0.5};
  const std::vector<std::int64_t> big = {1000000};
  const auto r = check_slow_site_density(iid, half, big);
  CHECK(r.rows.front().min_alpha - 0.5 < 0.01);
}

TEST_CASE("empirical annealed density") {
  const auto g = RateFunction::constant();
  const auto flat = Environment::constant(0.5, {-100, 100}, 0.8);
  const auto a = empirical_annealed_density(flat, g, 0.4, 50);
  CHECK(a.left == doctest::Approx(1.0));
  CHECK(a.right == doctest::Approx(1.0));
  const auto zero = empirical_annealed_density(flat, g, 0.0, 50);
  CHECK(zero.left == 0.0);
  CHECK_THROWS_AS(empirical_annealed_density(flat, g, 0.5, 50), DomainError);

  const auto sparse =
      build_sparse_defect_environment(0.5, kUniform, DefectSchedule::polynomial(2), {-1000000, 1000000});
  const auto small = empirical_annealed_density(sparse, g, 0.3, 100000);
  const auto large = empirical_annealed_density(sparse, g, 0.3, 1000000);
  CHECK(std::abs(small.left - large.left) < 1e-2);
  const double target = uniform_annealed(0.3);
  CHECK(std::abs(large.left - target) <= std::abs(small.left - target) + 1e-3);
  CHECK(std::abs(large.left - target) < 1e-2);
}

TEST_CASE("environment files round trip") {
  const auto env = build_iid_environment(0.5, kUniform, {-5, 5}, 99);
  const auto dir = std::filesystem::temp_directory_path() / "zrp_env_test";
  std::filesystem::create_directories(dir);
  env.write_csv(dir / "env.csv");
  env.write_sidecar(dir / "env.json");
  const auto back = Environment::read(dir / "env.csv", dir / "env.json");
  CHECK(back.window() == env.window());
  CHECK(back.floor() == 0.5);
  CHECK(std::equal(env.values().begin(), env.values().end(), back.values().begin()));
  CHECK(back.metadata()["seed"] == 99);
  std::filesystem::remove_all(dir);
}
