#pragma once

#include <filesystem>
#include <limits>
#include <memory>
#include <utility>
#include <vector>

#include <json.hpp>

#include "zrp/environment.hpp"
#include "zrp/rates.hpp"

namespace zrp {

/// R̄(lambda) = ∫ R(lambda / a) Q(da) for lambda in [0, c).
class AnnealedDensity {
 public:
  AnnealedDensity(RateFunction g, RateLaw q, double c);

  double floor() const { return c_; }
  const RateFunction& g() const { return g_; }
  const RateLaw& law() const { return q_; }

  /// R̄(lambda) for lambda in [0, c); lambda == c returns the left limit.
  double operator()(double lambda) const;

  /// Left limit R̄(c-), +inf when it diverges.
  double critical() const { return rho_c_; }
  bool critical_finite() const { return rho_c_ < std::numeric_limits<double>::infinity(); }
  /// Diagnostics of the critical-density estimate.
  const nlohmann::json& critical_report() const { return report_; }

 private:
  double integrate(double lambda) const;
  void locate_critical();

  RateFunction g_;
  RateLaw q_;
  double c_;
  double rho_c_ = std::numeric_limits<double>::infinity();
  nlohmann::json report_;
};

struct FluxSpec {
  double p = 1.0;
  /// Uniform lambda nodes on [0, c(1 - 2^-geometric_from)].
  int uniform_nodes = 200;
  /// Geometric nodes c(1 - 2^-k) for k in [geometric_from, geometric_to].
  int geometric_from = 6;
  int geometric_to = 40;
  int v_nodes = 201;
  /// (H) is tested on lambda <= c - delta_h; nonpositive means c/100.
  double delta_h = 0.0;
};

/// Tabulated macroscopic theory: R̄, rho_c, f, f*, f̂, 𝓡 and lambda^-, v0, (H).
class FluxTable {
 public:
  FluxTable(AnnealedDensity rbar, FluxSpec spec);

  const AnnealedDensity& annealed() const { return rbar_; }
  double p() const { return p_; }
  double q() const { return 1.0 - p_; }
  double drift() const { return 2.0 * p_ - 1.0; }
  double floor() const { return rbar_.floor(); }
  double rho_c() const { return rbar_.critical(); }
  bool rho_c_finite() const { return rbar_.critical_finite(); }

  const std::vector<double>& lambda_grid() const { return lambda_; }
  const std::vector<double>& rbar_table() const { return rbar_table_; }
  /// f at the lambda nodes: (p - q) lambda_i, paired with rho_i = R̄(lambda_i).
  const std::vector<double>& f_table() const { return f_; }
  const std::vector<double>& fhat_table() const { return fhat_; }
  const std::vector<double>& v_grid() const { return v_; }
  const std::vector<double>& fstar_table() const { return fstar_; }
  const std::vector<double>& fan_table() const { return fan_; }

  /// f(rho) = (p - q) R̄^{-1}(rho), monotone cubic interpolation in rho.
  double flux(double rho) const;
  /// sup over lambda in [0, c] of (p - q) lambda - v R̄(lambda).
  double fstar(double v) const;
  /// Same supremum over lambda in [0, Lambda].
  double fstar_restricted(double v, double lambda_cap) const;
  /// (𝓡(v), lambda^-(v)): smallest maximizer and its density.
  std::pair<double, double> fan(double v) const;
  /// lambda^-(v) restricted to [0, Lambda].
  double lambda_minus(double v, double lambda_cap) const;

  struct FrontSpeed {
    double v0;           // (p - q) / R̄'+(c) when (H) holds, otherwise v0_grid
    double v0_grid;      // (p - q) times the grid infimum of (c - l) / (R̄(c) - R̄(l))
    double rbar_prime;   // R̄'+(c), possibly +inf
    bool holds_h;
    double margin;       // min over l <= c - delta_h of R̄(l) - R̄(c) - (l - c) R̄'+(c)
  };
  /// Throws DomainError when rho_c is infinite.
  const FrontSpeed& front() const;

  nlohmann::json header() const;
  void write_csv(const std::filesystem::path& csv) const;
  void write_json(const std::filesystem::path& json) const;

 private:
  std::pair<double, double> maximize(double v, double hi) const;
  void build_front();

  AnnealedDensity rbar_;
  double p_;
  double delta_h_;
  std::vector<double> lambda_;
  std::vector<double> rbar_table_;
  std::vector<double> f_;
  std::vector<double> fhat_;
  std::vector<double> v_;
  std::vector<double> fstar_;
  std::vector<double> fan_;
  struct Inverse;
  std::shared_ptr<const Inverse> inverse_;  // lambda as a function of rho
  bool has_front_ = false;
  FrontSpeed front_{};
};

/// Upper concave hull of points sorted by x, evaluated back at every x.
std::vector<double> concave_envelope(const std::vector<double>& x, const std::vector<double>& y);

/// Biconjugate inf_v [rho v + f*(v)] over the table's v grid.
double biconjugate(const FluxTable& table, double rho);

}  // namespace zrp
