#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "zrp/errors.hpp"
#include "zrp/experiments.hpp"
#include "zrp/stats.hpp"

using namespace zrp;

namespace {

std::vector<double> geometric(double lambda, int n) {
  std::vector<double> p(static_cast<std::size_t>(n));
  double tail = 1.0;
  for (int k = 0; k + 1 < n; ++k) {
    p[static_cast<std::size_t>(k)] = (1 - lambda) * std::pow(lambda, k);
    tail -= p[static_cast<std::size_t>(k)];
  }
  p.back() = tail;
  return p;
}

ExperimentSpec small_equilibrium() {
  ExperimentSpec s;
  s.scenario = "stationarity";
  s.window = Window{-6, 5};
  s.horizon = 10.0;
  s.replicas = 60;
  s.seed = 5;
  return s;
}

}  // namespace

TEST_CASE("running statistics") {
  RunningStats s;
  for (double x : {1.0, 2.0, 3.0, 4.0}) s.add(x);
  CHECK(s.mean() == doctest::Approx(2.5));
  CHECK(s.variance() == doctest::Approx(5.0 / 3.0));
  CHECK(s.se() == doctest::Approx(std::sqrt(5.0 / 12.0)));

  Histogram h;
  for (std::int64_t k : {0, 0, 1, 3}) h.add(k);
  const auto pmf = h.pmf();
  REQUIRE(pmf.size() == 4);
  CHECK(pmf[0] == 0.5);
  CHECK(pmf[2] == 0.0);
}

TEST_CASE("total variation") {
  const auto g = geometric(0.5, 60);
  CHECK(compare_distributions(g, g, 0.01).distance == doctest::Approx(0.0));
  const std::vector<double> delta0 = {1.0};
  const auto d = compare_distributions(delta0, g, 0.01);
  CHECK(d.distance == doctest::Approx(0.5).epsilon(1e-12));
  CHECK_FALSE(d.pass);

  // Direct summation over a long support.
  const auto a = geometric(0.5, 200);
  const auto b = geometric(0.6, 200);
  double oracle = 0.0;
  for (int k = 0; k < 200; ++k) oracle += 0.5 * std::abs(0.5 * std::pow(0.5, k) - 0.4 * std::pow(0.6, k));
  CHECK(compare_distributions(a, b, 0.2).distance == doctest::Approx(oracle).epsilon(1e-10));
  CHECK(oracle == doctest::Approx(0.11).epsilon(1e-12));

  const std::vector<double> bad = {0.5, 0.4};
  CHECK_THROWS_AS(compare_distributions(bad, g, 0.1), DomainError);
}

TEST_CASE("truncated mean") {
  // theta_{1/2} for constant rates is geometric: E min(eta, 5) = sum_{k<=5} 2^-k.
  CHECK(truncated_mean(RateFunction::constant(), 0.5, 5) == doctest::Approx(0.96875).epsilon(1e-12));
  CHECK(truncated_mean(RateFunction::constant(), 0.0, 5) == 0.0);
}

TEST_CASE("spec round trip and validation") {
  ExperimentSpec s = small_equilibrium();
  s.v_list = {0.3, 0.49};
  s.initial_density = 4.0;
  const auto back = ExperimentSpec::from_json(s.to_json());
  CHECK(back.to_json() == s.to_json());
  CHECK(back.window->first == -6);

  auto few = s;
  few.replicas = 10;
  CHECK_THROWS_AS(few.validate(), ConfigError);
  auto drift = s;
  drift.p = 0.4;
  CHECK_THROWS_AS(drift.validate(), ConfigError);
  auto unknown = s;
  unknown.scenario = "nope";
  CHECK_THROWS_AS(run_experiment(unknown), ConfigError);
}

TEST_CASE("stationarity smoke run is reproducible") {
  const auto s = small_equilibrium();
  const auto a = run_stationarity_experiment(s);
  const auto b = run_stationarity_experiment(s);
  CHECK(a.to_json() == b.to_json());
  CHECK(a.rows.size() == 13);
  CHECK(a.rows.back().id == "site_failures");

  const auto dir = std::filesystem::temp_directory_path() / "zrp_report_test";
  a.write(dir);
  std::ifstream csv(dir / "report.csv");
  std::string header;
  std::getline(csv, header);
  CHECK(header.rfind("id,metric", 0) == 0);
  std::filesystem::remove_all(dir);
}

TEST_CASE("equilibrium current smoke run") {
  auto s = small_equilibrium();
  s.scenario = "equilibrium_current";
  s.lambda_list = {0.2};
  s.horizon = 50.0;
  const auto r = run_experiment(s);
  REQUIRE(r.rows.size() == 1);
  CHECK(r.rows[0].target == doctest::Approx(0.6 * 0.2));
  CHECK(r.rows[0].se > 0.0);
}

TEST_CASE("coupling checks on small samples") {
  const auto i = run_interface_check(3, 40, 2000);
  CHECK(i.pass());
  CHECK(i.rows[1].empirical <= 1.0);
  const auto c = run_current_comparison_check(3, 20);
  CHECK(c.pass());
}

TEST_CASE("refusals") {
  ExperimentSpec s;
  s.scenario = "local_equilibrium";
  s.env.kind = "constant";
  s.env.value = 1.0;
  s.p = 1.0;
  s.lambda = 0.5;
  s.horizon = 50;
  s.replicas = 30;
  s.v_list = {0.2};
  // v0 = 1/4 for this control.
  CHECK_THROWS_AS(run_experiment(s), ConfigError);
  s.v_list = {0.5};
  s.beta = -0.4;
  CHECK_THROWS_AS(run_experiment(s), ConfigError);

  ExperimentSpec conv;
  conv.scenario = "convergence";
  conv.env.law = RateLaw::uniform(0.5, 1.0);  // rho_c infinite
  conv.horizon = 100;
  conv.replicas = 30;
  CHECK_THROWS_WITH_AS(run_experiment(conv), doctest::Contains("assumption surrogate failed"), ConfigError);
}

TEST_CASE("source hydrodynamics at small scale") {
  ExperimentSpec s;
  s.scenario = "source_hydro";
  s.env.kind = "constant";
  s.env.value = 1.0;
  s.p = 1.0;
  s.lambda = 0.5;
  s.horizon = 200;
  s.replicas = 40;
  s.v_list = {0.49, 1.5};
  s.tolerance = 0.03;
  const auto r = run_experiment(s);
  REQUIRE(r.rows.size() == 2);
  CHECK(r.rows[0].target == doctest::Approx(0.09).epsilon(1e-4));
  CHECK(r.rows[1].empirical == 0.0);
  CHECK(r.pass());
}
