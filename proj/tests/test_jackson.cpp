#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>

#include "zrp/errors.hpp"
#include "zrp/harris.hpp"
#include "zrp/jackson.hpp"
#include "zrp/stats.hpp"

using namespace zrp;

namespace {

const RateLaw kUniform = RateLaw::uniform(0.5, 1.0);

// Window [-1,1], S = {-1,1}, alpha = (0.6, 0.9, 0.9).
Environment three_sites() { return Environment(0.5, {-1, 1}, {0.6, 0.9, 0.9}); }

// Gauss-Seidel sweeps on the balance equations; independent of the tridiagonal solve.
std::vector<double> iterate_balance(std::vector<double> lam, const std::vector<bool>& in_s, double p, double lv,
                                    double rv) {
  for (std::size_t i = 0; i < lam.size(); ++i)
    if (!in_s[i]) lam[i] = 0.0;
  for (int sweep = 0; sweep < 200000; ++sweep) {
    double change = 0.0;
    for (std::size_t i = 0; i < lam.size(); ++i) {
      if (in_s[i]) continue;
      const double below = i == 0 ? lv : lam[i - 1];
      const double above = i + 1 == lam.size() ? rv : lam[i + 1];
      const double next = p * below + (1 - p) * above;
      change = std::max(change, std::abs(next - lam[i]));
      lam[i] = next;
    }
    if (change < 1e-15) break;
  }
  return lam;
}

}  // namespace

TEST_CASE("single free site") {
  const auto env = three_sites();
  const std::vector<std::int64_t> s = {-1, 1};
  const auto sol = solve_traffic(env, s, 0.8);
  CHECK(sol.at(0) == doctest::Approx(0.8 * 0.6 + 0.2 * 0.9).epsilon(1e-15));
  CHECK(std::abs(sol.at(0) - 0.66) < 1e-15);
  CHECK(sol.max_residual < 1e-12);
  CHECK(sol.recurrent);
  CHECK(sol.free_sites() == std::vector<std::int64_t>{0});

  const auto h = traffic_by_hitting(env, s, 0.8, 0, 20000, 7);
  CHECK(std::abs(h.mean - 0.66) < 4 * h.se);

  const auto mu = stationary_measure(env, sol, RateFunction::constant());
  CHECK(mu.fugacity(0) == doctest::Approx(0.66 / 0.9));
  CHECK(mu.is_source(-1));
  CHECK(mu.is_source(1));
}

TEST_CASE("totally asymmetric pass-through") {
  const Environment env(0.5, {-1, 2}, {0.7, 0.95, 0.8, 0.6});
  const std::vector<std::int64_t> s = {-1, 2};
  const auto sol = solve_traffic(env, s, 1.0);
  CHECK(sol.at(0) == 0.7);
  CHECK(sol.at(1) == 0.7);
  // The reversed walk steps left deterministically and stops at the left neighbour in S.
  const auto h = traffic_by_hitting(env, s, 1.0, 1, 100, 3);
  CHECK(h.mean == 0.7);
  CHECK(h.se == 0.0);
}

TEST_CASE("constant boundary data gives a constant solution") {
  const Window w{-6, 6};
  std::vector<double> a(w.size(), 0.95);
  std::vector<std::int64_t> s;
  for (auto x = w.first; x < 0; ++x) {
    a[w.index(x)] = 0.7;
    s.push_back(x);
  }
  a[w.index(6)] = 0.7;
  s.push_back(6);
  const Environment env(0.5, w, a);
  for (double p : {0.6, 0.8, 1.0}) {
    const auto sol = solve_traffic(env, s, p);
    for (std::int64_t x = 0; x < 6; ++x) CHECK(sol.at(x) == doctest::Approx(0.7).epsilon(1e-14));
    const auto h = traffic_by_hitting(env, s, p, 2, 200, 1);
    CHECK(h.mean == doctest::Approx(0.7).epsilon(1e-14));
  }
  // Edge reservoirs play the role of boundary sources.
  const Environment open(0.5, {0, 9}, std::vector<double>(10, 0.9));
  const auto sol = solve_traffic(open, {}, 0.75, Edge::source(0.3), Edge::source(0.3));
  for (std::int64_t x = 0; x <= 9; ++x) CHECK(sol.at(x) == doctest::Approx(0.3).epsilon(1e-14));
  CHECK_THROWS_AS(solve_traffic(open, {}, 0.75, Edge::closed(), Edge::sink()), ConfigError);
}

TEST_CASE("linear solve agrees with iteration and with hitting on random instances") {
  Rng rng(2024);
  int instance = 0;
  for (; instance < 20; ++instance) {
    const auto n = static_cast<std::int64_t>(6 + rng.below(20));
    const Window w{-n / 2, n - n / 2 - 1};
    const auto env = build_iid_environment(0.5, kUniform, w, 100 + instance);
    std::vector<std::int64_t> s = {w.first, w.last};
    for (auto x = w.first + 1; x < w.last; ++x)
      if (rng.bernoulli(0.25)) s.push_back(x);
    const double p = 0.55 + 0.45 * rng.uniform();
    const auto sol = solve_traffic(env, s, p);
    CHECK(sol.max_residual < 1e-12);

    std::vector<double> a(env.values().begin(), env.values().end());
    const auto ref = iterate_balance(a, sol.in_source, p, 0.0, 0.0);
    for (std::size_t i = 0; i < ref.size(); ++i) CHECK(std::abs(ref[i] - sol.lambda[i]) < 1e-12);

    const auto free = sol.free_sites();
    if (free.empty()) continue;
    const auto x = free[rng.below(free.size())];
    const auto h = traffic_by_hitting(env, s, p, x, 4000, 500 + instance);
    // Exact standard error from the second moment E[alpha(X_T)^2], which solves the same system.
    for (auto& v : a) v *= v;
    const auto second = iterate_balance(a, sol.in_source, p, 0.0, 0.0);
    const double var = std::max(0.0, second[w.index(x)] - sol.at(x) * sol.at(x));
    const double se = std::max(h.se, std::sqrt(var / double(h.walks)));
    CHECK(std::abs(h.mean - sol.at(x)) < 4 * se + 1e-12);
  }
  CHECK(instance == 20);
}

TEST_CASE("augmentation restores recurrence") {
  // Fast neighbours push lambda(0) above the slow rate alpha(0).
  const Environment env(0.5, {-2, 2}, {0.95, 0.99, 0.55, 0.99, 0.95});
  const std::vector<std::int64_t> s = {-2, 2};
  const auto sol = solve_traffic(env, s, 0.7);
  CHECK_FALSE(sol.recurrent);
  CHECK(sol.at(0) >= 0.55);
  CHECK_THROWS_AS(stationary_measure(env, sol, RateFunction::constant()), DomainError);

  const auto aug = augment_source(env, sol);
  CHECK(aug.added == std::vector<std::int64_t>{0});
  CHECK(aug.env(0) == sol.at(0));
  for (auto x : aug.sources) CHECK(aug.env(x) >= env(x));
  const auto again = solve_traffic(aug.env, aug.sources, 0.7);
  CHECK(again.recurrent);
  for (auto x : again.free_sites()) CHECK(again.at(x) < aug.env(x));
  for (auto x : again.free_sites()) CHECK(again.at(x) == doctest::Approx(sol.at(x)).epsilon(1e-14));

  const auto same = augment_source(aug.env, again);
  CHECK(same.added.empty());
  CHECK(same.sources == aug.sources);
}

TEST_CASE("barrier construction") {
  const auto env = build_sparse_defect_environment(0.5, kUniform, DefectSchedule::polynomial(2), {-400, 400});
  const std::vector<std::int64_t> f = {0};
  double prev = 2.0;
  for (double eps : {0.2, 0.1, 0.05}) {
    const auto d = choose_delta(env, eps, 0.8, 0, 31);
    CHECK(d.slow_exit_fraction >= 0.99);
    const auto b = barrier_construction(env, eps, d.delta, 0.8, f);
    CHECK(b.augmented_traffic.recurrent);
    CHECK(b.traffic.max_residual < 1e-12);
    const double lam = b.reported.front().second;
    CHECK(lam < prev);
    CHECK(lam > 0.5);
    prev = lam;
    if (eps == 0.1) {
      const auto h = traffic_by_hitting(b.augmented.env, b.augmented.sources, 0.8, 0, 4000, 9);
      CHECK(std::abs(h.mean - lam) < 4 * h.se + 1e-12);
    }
  }

  const auto slow = Environment::constant(0.5, {-50, 50}, 0.55);
  CHECK_THROWS_AS(barrier_construction(slow, 0.1, 0.1, 0.8, f), ConfigError);
  CHECK_THROWS_AS(barrier_construction(env, 0.1, 0.001, 0.8, f), ConfigError);
  const auto fast = Environment::constant(0.5, {-50, 50}, 0.95);
  CHECK_THROWS_AS(barrier_construction(fast, 0.1, 0.1, 0.8, f), ConfigError);
}

TEST_CASE("csv export") {
  const auto sol = solve_traffic(three_sites(), std::vector<std::int64_t>{-1, 1}, 0.8);
  const auto path = std::filesystem::temp_directory_path() / "zrp_traffic.csv";
  sol.write_csv(path);
  std::ifstream in(path);
  std::string header, row;
  std::getline(in, header);
  CHECK(header == "site,lambda,alpha,in_S");
  std::getline(in, row);
  CHECK(row.rfind("-1,", 0) == 0);
  CHECK(std::stod(row.substr(3)) == 0.6);
  std::filesystem::remove(path);
}

TEST_CASE("stationary measure is invariant in simulation") {
  const Window w{-3, 3};
  auto env = std::make_shared<const Environment>(Environment(0.5, w, {0.6, 0.8, 0.95, 0.7, 0.9, 0.85, 0.9}));
  const std::vector<std::int64_t> s = {-3, 3};
  const auto sol = solve_traffic(*env, s, 0.75);
  REQUIRE(sol.recurrent);
  const auto g = RateFunction::constant();
  const auto mu = stationary_measure(*env, sol, g);
  std::vector<RunningStats> stats(w.size());
  const int replicas = 1000;
  for (int r = 0; r < replicas; ++r) {
    Rng rng(derive_seed(77, r, StreamTag::initial));
    Process proc(env, g, mu.sample(rng));
    EventStream ev(derive_seed(77, r, StreamTag::harris), harris_sites(w), 0.75);
    evolve(proc, ev, 50.0);
    for (auto x = w.first + 1; x < w.last; ++x) stats[w.index(x)].add(double(proc.config()[x].count()));
  }
  for (auto x = w.first + 1; x < w.last; ++x) {
    const auto& st = stats[w.index(x)];
    CHECK(std::abs(st.mean() - mu.mean(x)) < 4 * st.se());
  }
}
