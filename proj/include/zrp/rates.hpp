#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "zrp/occupancy.hpp"

namespace zrp {

enum class RateKind { constant, tabulated, concave };

std::string to_string(RateKind kind);
RateKind rate_kind_from_string(const std::string& name);

/// Jump rate g: N -> [0,1], nondecreasing, g(0) = 0 and g(n) = 1 beyond the
/// table. The table holds g(1), ..., g(n_max).
class RateFunction {
 public:
  /// g(n) = 1 for every n >= 1.
  static RateFunction constant();
  static RateFunction tabulated(std::vector<double> values);
  /// Table whose increments g(n+1) - g(n) must be nonincreasing.
  static RateFunction concave(std::vector<double> values);
  /// g(n) = min(1, n / k); concave, saturates at n = k.
  static RateFunction ramp(int k);

  double operator()(std::int64_t n) const {
    if (n <= 0) return 0.0;
    const auto i = static_cast<std::size_t>(n);
    return i <= values_.size() ? values_[i - 1] : 1.0;
  }
  double operator()(Occupancy n) const {
    return n.is_infinite() ? 1.0 : (*this)(n.count());
  }

  RateKind kind() const { return kind_; }
  std::span<const double> table() const { return values_; }
  /// Largest n with a tabulated value; g(n) = 1 for n > saturation().
  std::int64_t saturation() const { return static_cast<std::int64_t>(values_.size()); }

  nlohmann::json to_json() const;
  static RateFunction from_json(const nlohmann::json& j);

 private:
  RateFunction(RateKind kind, std::vector<double> values);

  RateKind kind_;
  std::vector<double> values_;
};

/// Z(lambda) = sum_n lambda^n / g(n)!. Exact: the tail beyond the table is a
/// geometric series.
double partition_function(const RateFunction& g, double lambda);

/// R(lambda): mean of theta_lambda.
double mean_density(const RateFunction& g, double lambda);

/// Variance of theta_lambda.
double density_variance(const RateFunction& g, double lambda);

/// Inverse of R on [0,1): the fugacity whose mean is rho.
double fugacity_for_mean(const RateFunction& g, double rho);

/// theta_lambda as a truncated pmf/cdf table with exact moments.
class SingleSiteLaw {
 public:
  static constexpr double kTailTolerance = 1e-12;
  static constexpr std::size_t kMaxTerms = 1'000'000;

  SingleSiteLaw(const RateFunction& g, double lambda,
                double tail_tolerance = kTailTolerance);

  double lambda() const { return lambda_; }
  double mean() const { return mean_; }
  double variance() const { return variance_; }
  double partition() const { return z_; }

  std::span<const double> pmf() const { return pmf_; }
  std::span<const double> cdf() const { return cdf_; }
  /// Exact theta_lambda(n), also beyond the stored table.
  double pmf(std::int64_t n) const;
  double cdf(std::int64_t n) const;

  /// Left-continuous generalized inverse: smallest n with F(n) >= u, u in (0,1).
  std::int64_t quantile(double u) const;

 private:
  double lambda_;
  double z_;
  double mean_;
  double variance_;
  std::int64_t saturation_;
  double weight_at_saturation_;  // lambda^M / g(M)!
  std::vector<double> pmf_;
  std::vector<double> cdf_;
};

/// F_lambda^{-1}(u) for theta_lambda.
std::int64_t sample_theta(const RateFunction& g, double lambda, double u);

}  // namespace zrp
