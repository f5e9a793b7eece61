#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "zrp/environment.hpp"
#include "zrp/rates.hpp"
#include "zrp/window.hpp"

namespace zrp {

/// Declarative environment description.
///   {"kind": "constant", "c": 0.5, "value": 1.0}
///   {"kind": "iid", "c": 0.5, "law": {...}, "seed": 7}
///   {"kind": "sparse_defect", "c": 0.5, "law": {...}, "schedule": {...}}
///   {"kind": "file", "csv": "env.csv", "sidecar": "env.json"}
struct EnvSpec {
  std::string kind = "sparse_defect";
  double c = 0.5;
  RateLaw law = RateLaw::power(0.5, 1.0, 2.0);
  DefectSchedule schedule = DefectSchedule::polynomial(2);
  double value = 1.0;
  std::uint64_t seed = 0;
  std::filesystem::path csv;
  std::filesystem::path sidecar;

  Environment build(Window window) const;
  /// The law Q whose annealed averages the analytic layer uses.
  RateLaw annealed_law() const;

  nlohmann::json to_json() const;
  static EnvSpec from_json(const nlohmann::json& j);
};

struct ExperimentSpec {
  std::string scenario;
  EnvSpec env;
  RateFunction g = RateFunction::constant();
  double p = 0.8;
  double horizon = 1000.0;
  /// Simulation window; derived from the scenario when absent.
  std::optional<Window> window;
  int replicas = 200;
  std::uint64_t seed = 1;
  /// Marginal sites F.
  std::vector<std::int64_t> sites = {0};
  /// Ray speeds for source scenarios.
  std::vector<double> v_list;
  /// Observation times for trend checks.
  std::vector<double> t_grid;
  /// Equilibrium level, or the fill level of a source.
  double lambda = 0.3;
  std::vector<double> lambda_list;
  double epsilon = 0.1;
  /// Source position x_t = floor(beta t).
  double beta = -1.0;
  int h_cap = 5;
  /// Level of the negative-control start.
  double control_lambda = 0.1;
  /// Absolute tolerance for scalar targets and total-variation tolerance for pmfs.
  double tolerance = 0.02;
  double tv_tolerance = 0.05;
  /// Marginals near x_t + vt are pooled over |y - (x_t + vt)| <= max(1, pool_fraction t).
  double pool_fraction = 0.005;
  /// ... and over `snapshots` times spread across [(1 - time_fraction) t, t].
  double time_fraction = 0.05;
  int snapshots = 20;
  /// Initial density left of the origin in supercritical starts; 2 rho_c when unset.
  std::optional<double> initial_density;
  std::filesystem::path out;

  void validate() const;
  nlohmann::json to_json() const;
  static ExperimentSpec from_json(const nlohmann::json& j);
};

/// One verdict. Informational rows carry no verdict and never fail a report.
struct ComparisonReport {
  std::string id;
  /// absolute | tv | upper_bound | lower_bound | count | trend
  std::string metric;
  /// closed_form | theorem_bound | definition | numerical_transform
  std::string target_source;
  double empirical = 0.0;
  double se = 0.0;
  double target = 0.0;
  double distance = 0.0;
  double tolerance = 0.0;
  std::int64_t replicas = 0;
  bool informational = false;
  bool pass = false;
  nlohmann::json detail = nlohmann::json::object();

  nlohmann::json to_json() const;
};

struct ExperimentReport {
  std::string scenario;
  nlohmann::json spec;
  std::vector<ComparisonReport> rows;

  bool pass() const;
  std::size_t failures() const;
  nlohmann::json to_json() const;
  /// report.json plus report.csv (one line per row) under `dir`.
  void write(const std::filesystem::path& dir) const;
};

/// Jackson-bounded window with edge reservoirs at lambda, started from
/// mu_lambda^alpha; per-site means at T against R(lambda / alpha(x)).
ExperimentReport run_stationarity_experiment(const ExperimentSpec& spec);

/// Same setting; fixed-site current over [0, T] against (p - q) lambda for
/// every level in lambda_list.
ExperimentReport run_equilibrium_current_experiment(const ExperimentSpec& spec);

/// Supercritical start (density 2 rho_c at x <= 0, empty at x > 0). Upper
/// bound E min(eta_T(x), K) <= int min(eta, K) d mu_c^alpha at every site of
/// F, TV to theta_{c/alpha(x)} for each time of t_grid, and the subcritical
/// negative control. Refuses to run if an assumption surrogate fails.
ExperimentReport run_convergence_experiment(const ExperimentSpec& spec);

/// Source at x_t filled at level lambda. Tail mass past x_t + vt, divided by
/// t, against f*(v, lambda) for each v.
ExperimentReport run_source_hydro_experiment(const ExperimentSpec& spec);

/// Same runs; pooled marginal near x_t + vt against theta_{lambda^-(v)/alpha}
/// for each time of t_grid, with a decreasing-TV trend row and the one-sided
/// bound for h = min(eta, K). Refuses v <= v0 and v >= -beta.
ExperimentReport run_local_equilibrium_experiment(const ExperimentSpec& spec, double v);

/// Both source reports from one set of runs.
std::pair<ExperimentReport, ExperimentReport> run_source_experiments(const ExperimentSpec& spec, double v);

/// Current through the slow site A_eps from a supercritical start, and from a
/// source at A_eps.
ExperimentReport run_slow_site_current_experiment(const ExperimentSpec& spec);

/// Coupled pairs with one sign change: ordering violations and sign-change
/// counts over `events` Harris events per pair.
ExperimentReport run_interface_check(std::uint64_t seed, int replicas, std::int64_t events);

/// Current comparison along random paths and source domination, on random
/// coupled instances.
ExperimentReport run_current_comparison_check(std::uint64_t seed, int instances);

/// Dispatch on spec.scenario.
ExperimentReport run_experiment(const ExperimentSpec& spec);

/// int min(eta, K) d theta_lambda.
double truncated_mean(const RateFunction& g, double lambda, int cap);

}  // namespace zrp
