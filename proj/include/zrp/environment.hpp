#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "zrp/rates.hpp"
#include "zrp/window.hpp"

namespace zrp {

/// Marginal law Q of the site rates, given through its distribution function.
/// Three families: a point mass, finitely many atoms, and the power law
/// F(a) = ((a - lo) / (hi - lo))^kappa on [lo, hi] (kappa = 1 is uniform).
class RateLaw {
 public:
  enum class Family { atoms, power };

  static RateLaw point(double a);
  static RateLaw atoms(std::vector<double> values, std::vector<double> weights);
  static RateLaw power(double lo, double hi, double kappa);
  static RateLaw uniform(double lo, double hi) { return power(lo, hi, 1.0); }

  Family family() const { return family_; }
  double cdf(double a) const;
  /// Left-continuous inverse inf{t : F(t) >= u}, u in (0,1].
  double quantile(double u) const;
  /// Infimum of the support.
  double lower() const;
  double upper() const;
  double mean() const;

  /// Atoms as (value, weight) pairs; empty for the power family.
  const std::vector<std::pair<double, double>>& atom_list() const { return atoms_; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }
  double kappa() const { return kappa_; }

  /// Throws ConfigError when Q charges (-inf, c] or (1, inf).
  void check_support(double c) const;

  nlohmann::json to_json() const;
  static RateLaw from_json(const nlohmann::json& j);

 private:
  Family family_ = Family::atoms;
  std::vector<std::pair<double, double>> atoms_;
  double lo_ = 0.0;
  double hi_ = 1.0;
  double kappa_ = 1.0;
};

/// Quenched rate field alpha on a finite window, c < alpha(x) <= 1.
class Environment {
 public:
  Environment(double floor, Window window, std::vector<double> alpha,
              nlohmann::json metadata = nlohmann::json::object());

  /// alpha == value on the whole window.
  static Environment constant(double floor, Window window, double value);

  double floor() const { return floor_; }
  const Window& window() const { return window_; }
  double operator()(std::int64_t x) const { return alpha_[window_.index(x)]; }
  std::span<const double> values() const { return alpha_; }
  const nlohmann::json& metadata() const { return metadata_; }

  /// Copy with alpha replaced at the given sites (used for augmented sources).
  Environment with_values(const std::vector<std::pair<std::int64_t, double>>& changes) const;
  /// Copy restricted to a sub-window.
  Environment restricted(Window sub) const;

  void write_csv(const std::filesystem::path& csv) const;
  void write_sidecar(const std::filesystem::path& json) const;
  static Environment read(const std::filesystem::path& csv, const std::filesystem::path& sidecar);

 private:
  double floor_;
  Window window_;
  std::vector<double> alpha_;
  nlohmann::json metadata_;
};

/// Decreasing interval endpoints x_0 = 0 > x_1 > x_2 > ... of the sparse-defect
/// construction. Either a polynomial rule x_j = -j^degree or an explicit list.
class DefectSchedule {
 public:
  static DefectSchedule polynomial(int degree);
  static DefectSchedule explicit_points(std::vector<std::int64_t> points);

  /// x_j; throws ConfigError past the end of an explicit list.
  std::int64_t point(std::size_t j) const;
  /// Number of realized points (unbounded for polynomial rules).
  std::size_t realized() const;
  /// Checks x_0 = 0, strict decrease, nondecreasing gaps and ratios x_{j+1}/x_j
  /// nonincreasing, on the prefix reaching down to `depth`.
  void validate(std::int64_t depth) const;

  /// (j, k) with x = x_j - k, for x < 0.
  std::pair<std::size_t, std::int64_t> locate(std::int64_t x) const;

  nlohmann::json to_json() const;
  static DefectSchedule from_json(const nlohmann::json& j);

 private:
  int degree_ = 2;
  std::vector<std::int64_t> points_;
};

/// beta(x) of the sparse-defect construction, x != 0, mirrored to x > 0.
double defect_level(const DefectSchedule& schedule, std::int64_t x);

Environment build_iid_environment(double c, const RateLaw& q, Window window, std::uint64_t seed);
/// Same construction from caller-supplied uniforms, one per site.
Environment build_iid_environment(double c, const RateLaw& q, Window window,
                                  std::span<const double> uniforms);

/// alpha(x) = F_Q^{-1}(beta(x)), alpha(0) = 1.
Environment build_sparse_defect_environment(double c, const RateLaw& q,
                                            const DefectSchedule& schedule, Window window);

struct SlowSites {
  std::int64_t left;   // A_eps = max{x <= 0 : alpha(x) <= c + eps}
  std::int64_t right;  // a_eps = min{x >= 0 : alpha(x) <= c + eps}
};

/// Throws ConfigError("window too small for eps") if either side has no slow site.
SlowSites slow_site_boundaries(const Environment& env, double epsilon);

struct SlowSiteDensityRow {
  double epsilon;
  std::int64_t n;
  double min_alpha;
};

struct SlowSiteDensityReport {
  std::vector<SlowSiteDensityRow> rows;
  /// Per epsilon: minimum at the largest n is within slack of c and not above
  /// the minimum at the smallest n.
  std::vector<std::pair<double, bool>> trends;
  double slack = 0.0;
  bool all_trending() const;
};

SlowSiteDensityReport check_slow_site_density(const Environment& env,
                                              std::span<const double> epsilons,
                                              std::span<const std::int64_t> ns, double slack = 0.05);

struct AnnealedAverages {
  double left;
  double right;
};

/// (n+1)^{-1} sum_{x=-n}^{0} R(lambda/alpha(x)) and the mirrored right average.
AnnealedAverages empirical_annealed_density(const Environment& env, const RateFunction& g,
                                            double lambda, std::int64_t n);

}  // namespace zrp
