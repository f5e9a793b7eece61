#include "zrp/rates.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "zrp/errors.hpp"

namespace zrp {

namespace {

void require_fugacity(double lambda) {
  if (!(lambda >= 0.0)) throw DomainError("fugacity must be nonnegative");
  if (lambda >= 1.0) throw DomainError("theta_lambda undefined at or above 1");
}

struct Moments {
  double z = 0.0;   // sum w_n
  double s1 = 0.0;  // sum n w_n
  double s2 = 0.0;  // sum n^2 w_n
  double w_sat = 0.0;
};

// Weights w_n = lambda^n / g(n)!. Beyond the table g = 1, so the remainder of
// each series is an explicit geometric sum.
Moments moments(const RateFunction& g, double lambda) {
  require_fugacity(lambda);
  Moments m;
  double w = 1.0;
  m.z = 1.0;
  const std::int64_t sat = g.saturation();
  for (std::int64_t n = 1; n <= sat; ++n) {
    w *= lambda / g(n);
    const auto dn = static_cast<double>(n);
    m.z += w;
    m.s1 += dn * w;
    m.s2 += dn * dn * w;
  }
  m.w_sat = w;
  const double om = 1.0 - lambda;
  const double big_m = static_cast<double>(sat);
  const double geo0 = lambda / om;
  const double geo1 = lambda / (om * om);
  const double geo2 = lambda * (1.0 + lambda) / (om * om * om);
  m.z += w * geo0;
  m.s1 += w * (big_m * geo0 + geo1);
  m.s2 += w * (big_m * big_m * geo0 + 2.0 * big_m * geo1 + geo2);
  return m;
}

void validate_table(const std::vector<double>& v) {
  double prev = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double x = v[i];
    if (!(x > 0.0) || x > 1.0)
      throw ConfigError("rate table values must lie in (0,1], got " + std::to_string(x) +
                        " at n=" + std::to_string(i + 1));
    if (x < prev) throw ConfigError("rate table must be nondecreasing at n=" + std::to_string(i + 1));
    prev = x;
  }
}

}  // namespace

std::string to_string(RateKind kind) {
  switch (kind) {
    case RateKind::constant: return "constant";
    case RateKind::tabulated: return "tabulated";
    case RateKind::concave: return "concave";
  }
  return "unknown";
}

RateKind rate_kind_from_string(const std::string& name) {
  if (name == "constant") return RateKind::constant;
  if (name == "tabulated") return RateKind::tabulated;
  if (name == "concave") return RateKind::concave;
  throw ConfigError("unknown rate kind '" + name + "'");
}

RateFunction::RateFunction(RateKind kind, std::vector<double> values)
    : kind_(kind), values_(std::move(values)) {
  validate_table(values_);
  // Trailing ones carry no information.
  while (!values_.empty() && values_.back() == 1.0) values_.pop_back();
}

RateFunction RateFunction::constant() { return RateFunction(RateKind::constant, {}); }

RateFunction RateFunction::tabulated(std::vector<double> values) {
  return RateFunction(RateKind::tabulated, std::move(values));
}

RateFunction RateFunction::concave(std::vector<double> values) {
  validate_table(values);
  double prev_inc = values.empty() ? 1.0 : values.front();
  double prev = 0.0;
  for (std::size_t i = 0; i <= values.size(); ++i) {
    const double x = i < values.size() ? values[i] : 1.0;
    const double inc = x - prev;
    if (inc > prev_inc + 1e-15)
      throw ConfigError("concave rate table needs nonincreasing increments (n=" +
                        std::to_string(i + 1) + ")");
    prev_inc = inc;
    prev = x;
  }
  return RateFunction(RateKind::concave, std::move(values));
}

RateFunction RateFunction::ramp(int k) {
  if (k < 1) throw ConfigError("ramp saturation must be >= 1");
  std::vector<double> v;
  for (int n = 1; n < k; ++n) v.push_back(static_cast<double>(n) / k);
  return RateFunction(RateKind::concave, std::move(v));
}

nlohmann::json RateFunction::to_json() const {
  return {{"kind", to_string(kind_)}, {"g_values", values_}};
}

RateFunction RateFunction::from_json(const nlohmann::json& j) {
  const auto kind = rate_kind_from_string(j.at("kind").get<std::string>());
  std::vector<double> values;
  if (j.contains("g_values")) values = j.at("g_values").get<std::vector<double>>();
  switch (kind) {
    case RateKind::constant:
      if (std::any_of(values.begin(), values.end(), [](double x) { return x != 1.0; }))
        throw ConfigError("constant rate function must have g_values all equal to 1");
      return constant();
    case RateKind::tabulated: return tabulated(std::move(values));
    case RateKind::concave: return concave(std::move(values));
  }
  throw ConfigError("unreachable rate kind");
}

double partition_function(const RateFunction& g, double lambda) {
  return moments(g, lambda).z;
}

double mean_density(const RateFunction& g, double lambda) {
  const auto m = moments(g, lambda);
  return m.s1 / m.z;
}

double density_variance(const RateFunction& g, double lambda) {
  const auto m = moments(g, lambda);
  const double mean = m.s1 / m.z;
  return std::max(0.0, m.s2 / m.z - mean * mean);
}

double fugacity_for_mean(const RateFunction& g, double rho) {
  if (!(rho >= 0.0) || !std::isfinite(rho)) throw DomainError("density must be finite and >= 0");
  if (rho == 0.0) return 0.0;
  double lo = 0.0;
  double hi = 1.0;
  for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    (mean_density(g, mid) < rho ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

SingleSiteLaw::SingleSiteLaw(const RateFunction& g, double lambda, double tail_tolerance)
    : lambda_(lambda) {
  const auto m = moments(g, lambda);
  z_ = m.z;
  mean_ = m.s1 / m.z;
  variance_ = std::max(0.0, m.s2 / m.z - mean_ * mean_);
  saturation_ = g.saturation();
  weight_at_saturation_ = m.w_sat;

  double w = 1.0;
  double partial = 1.0;
  pmf_.push_back(1.0 / z_);
  for (std::int64_t n = 1; static_cast<std::size_t>(n) < kMaxTerms; ++n) {
    w *= lambda / g(n);
    if (w == 0.0) break;
    partial += w;
    pmf_.push_back(w / z_);
    if (n >= saturation_ && w < tail_tolerance * partial) break;
  }
  cdf_.resize(pmf_.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < pmf_.size(); ++i) {
    acc += pmf_[i];
    cdf_[i] = std::min(acc, 1.0);
  }
}

double SingleSiteLaw::pmf(std::int64_t n) const {
  if (n < 0) return 0.0;
  if (static_cast<std::size_t>(n) < pmf_.size()) return pmf_[static_cast<std::size_t>(n)];
  if (lambda_ == 0.0) return 0.0;
  return weight_at_saturation_ * std::pow(lambda_, static_cast<double>(n - saturation_)) / z_;
}

double SingleSiteLaw::cdf(std::int64_t n) const {
  if (n < 0) return 0.0;
  if (static_cast<std::size_t>(n) < cdf_.size()) return cdf_[static_cast<std::size_t>(n)];
  if (lambda_ == 0.0) return 1.0;
  const double tail = weight_at_saturation_ *
                      std::pow(lambda_, static_cast<double>(n + 1 - saturation_)) /
                      ((1.0 - lambda_) * z_);
  return 1.0 - tail;
}

std::int64_t SingleSiteLaw::quantile(double u) const {
  if (!(u > 0.0) || !(u < 1.0)) throw DomainError("quantile level must lie in (0,1)");
  if (u <= cdf_.back()) {
    const auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
    return static_cast<std::int64_t>(it - cdf_.begin());
  }
  // Past the table only the geometric tail remains.
  const double a = weight_at_saturation_ / ((1.0 - lambda_) * z_);
  auto n = static_cast<std::int64_t>(cdf_.size());
  const double steps = std::ceil(std::log((1.0 - u) / a) / std::log(lambda_));
  if (std::isfinite(steps)) n = std::max(n, saturation_ - 1 + static_cast<std::int64_t>(steps));
  while (n > static_cast<std::int64_t>(cdf_.size()) && cdf(n - 1) >= u) --n;
  while (cdf(n) < u) ++n;
  return n;
}

std::int64_t sample_theta(const RateFunction& g, double lambda, double u) {
  if (!(u > 0.0) || !(u < 1.0)) throw DomainError("uniform level must lie in (0,1)");
  return SingleSiteLaw(g, lambda).quantile(u);
}

}  // namespace zrp
