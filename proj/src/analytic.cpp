#include "zrp/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

// Boost 1.74's pchip calls isnan unqualified.
using std::isnan;
#include <boost/math/interpolators/pchip.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/tools/minima.hpp>

#include "zrp/errors.hpp"

namespace zrp {

struct FluxTable::Inverse {
  boost::math::interpolators::pchip<std::vector<double>> spline;
};

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Ratio of successive increments above which a sequence is treated as not
// converging (log-type growth has ratio 1, geometric convergence ratio < 1).
constexpr double kStallRatio = 0.9;

nlohmann::json finite_or_string(double x) {
  if (std::isfinite(x)) return x;
  return x > 0 ? "inf" : "-inf";
}

}  // namespace

// ---------------------------------------------------------------------------
// R̄

AnnealedDensity::AnnealedDensity(RateFunction g, RateLaw q, double c)
    : g_(std::move(g)), q_(std::move(q)), c_(c) {
  if (!(c > 0.0 && c < 1.0)) throw ConfigError("floor c must lie in (0,1)");
  q_.check_support(c_);
  locate_critical();
}

double AnnealedDensity::integrate(double lambda) const {
  if (lambda == 0.0) return 0.0;
  if (q_.family() == RateLaw::Family::atoms) {
    double s = 0.0;
    for (const auto& [a, w] : q_.atom_list()) s += w * mean_density(g_, lambda / a);
    return s;
  }
  // u = F_Q(a) maps the law to Lebesgue measure on (0,1); the only possible
  // singularity sits at u = 0, where tanh-sinh nodes cluster.
  const double lo = q_.lo();
  const double span = q_.hi() - lo;
  const double inv_kappa = 1.0 / q_.kappa();
  auto integrand = [&](double u) {
    const double a = lo + span * std::pow(u, inv_kappa);
    if (!(a > lambda)) return 0.0;  // underflow at the endpoint itself
    return mean_density(g_, lambda / a);
  };
  boost::math::quadrature::tanh_sinh<double> ts;
  return ts.integrate(integrand, 0.0, 1.0, 1e-15);
}

double AnnealedDensity::operator()(double lambda) const {
  if (!(lambda >= 0.0) || lambda > c_) throw DomainError("annealed density needs lambda in [0,c]");
  if (lambda == c_) return rho_c_;
  return integrate(lambda);
}

void AnnealedDensity::locate_critical() {
  report_ = nlohmann::json::object();
  const bool singular = q_.family() == RateLaw::Family::power && q_.lo() <= c_;
  if (!singular) {
    // Q stays away from c, so R(c/a) is bounded on the support.
    rho_c_ = integrate(c_);
    report_["method"] = "direct";
    report_["rho_c"] = rho_c_;
    return;
  }
  const int depth = 30;
  std::vector<double> s;
  for (int k = 1; k <= depth; ++k) s.push_back(integrate(c_ * (1.0 - std::ldexp(1.0, -k))));
  const double cap = 1e6 * integrate(0.5 * c_);
  const double d1 = s[depth - 1] - s[depth - 2];
  const double d0 = s[depth - 2] - s[depth - 3];
  const double ratio = d1 / d0;
  report_["method"] = "sequence";
  report_["last_value"] = s.back();
  report_["increment_ratio"] = ratio;
  report_["cap"] = cap;
  if (s.back() > cap || ratio > kStallRatio) {
    rho_c_ = kInf;
    report_["rho_c"] = "inf";
    return;
  }
  const double aitken = s[depth - 1] - d1 * d1 / (d1 - d0);
  // Monotone convergence: R̄(c-) equals the integral of R(c/a).
  double direct = kInf;
  try {
    direct = integrate(c_);
  } catch (const std::exception&) {
  }
  report_["aitken"] = aitken;
  report_["direct"] = finite_or_string(direct);
  const bool direct_ok = std::isfinite(direct) && direct >= s.back() - 1e-9 &&
                         std::abs(direct - aitken) <= 1e-3 * std::max(1.0, aitken);
  rho_c_ = direct_ok ? direct : aitken;
  report_["rho_c"] = rho_c_;
}

// ---------------------------------------------------------------------------
// Flux table

FluxTable::FluxTable(AnnealedDensity rbar, FluxSpec spec) : rbar_(std::move(rbar)), p_(spec.p) {
  if (!(p_ > 0.5 && p_ <= 1.0)) throw ConfigError("p must lie in (1/2, 1]");
  if (spec.uniform_nodes < 4 || spec.geometric_to < spec.geometric_from || spec.v_nodes < 2)
    throw ConfigError("flux grid too small");
  const double c = rbar_.floor();
  delta_h_ = spec.delta_h > 0.0 ? spec.delta_h : c / 100.0;

  const double top = c * (1.0 - std::ldexp(1.0, -spec.geometric_from));
  for (int i = 0; i <= spec.uniform_nodes; ++i) lambda_.push_back(top * i / spec.uniform_nodes);
  for (int k = spec.geometric_from + 1; k <= spec.geometric_to; ++k)
    lambda_.push_back(c * (1.0 - std::ldexp(1.0, -k)));
  if (rho_c_finite()) lambda_.push_back(c);

  // Keep only nodes where the computed R̄ strictly increases; very close to c
  // quadrature noise can exceed the true increment.
  std::vector<double> kept_l, kept_r;
  for (double l : lambda_) {
    const double r = rbar_(l);
    if (!kept_r.empty() && !(r > kept_r.back())) continue;
    kept_l.push_back(l);
    kept_r.push_back(r);
  }
  lambda_ = std::move(kept_l);
  rbar_table_ = std::move(kept_r);
  if (rho_c_finite() && lambda_.back() != c) {
    lambda_.push_back(c);
    rbar_table_.push_back(rho_c());
  }

  const double d = drift();
  for (double l : lambda_) f_.push_back(d * l);
  fhat_ = concave_envelope(rbar_table_, f_);
  inverse_ = std::make_shared<const Inverse>(
      Inverse{{std::vector<double>(rbar_table_), std::vector<double>(lambda_)}});

  // Beyond (p - q) / R̄'(0) the supremum sits at lambda = 0.
  const double slope0 = rbar_table_[1] / lambda_[1];
  const double v_hi = 1.2 * d / slope0;
  for (int j = 0; j < spec.v_nodes; ++j) {
    const double v = v_hi * j / (spec.v_nodes - 1);
    v_.push_back(v);
    if (v == 0.0 && !rho_c_finite()) {
      fstar_.push_back(d * c);
      fan_.push_back(kInf);
      continue;
    }
    fstar_.push_back(fstar(v));
    fan_.push_back(fan(v).first);
  }
  if (rho_c_finite()) build_front();
}

double FluxTable::flux(double rho) const {
  if (!(rho >= 0.0)) throw DomainError("density must be nonnegative");
  if (rho > rho_c()) throw DomainError("density above the critical density");
  if (rho >= rbar_table_.back()) return drift() * lambda_.back();
  return drift() * std::clamp(inverse_->spline(rho), 0.0, rbar_.floor());
}

std::pair<double, double> FluxTable::maximize(double v, double hi) const {
  const double d = drift();
  auto objective = [&](double l) { return d * l - v * rbar_(l); };
  std::vector<double> nodes;
  std::vector<double> vals;
  for (std::size_t i = 0; i < lambda_.size() && lambda_[i] < hi; ++i) {
    nodes.push_back(lambda_[i]);
    vals.push_back(d * lambda_[i] - v * rbar_table_[i]);
  }
  nodes.push_back(hi);
  vals.push_back(objective(hi));

  const double best = *std::max_element(vals.begin(), vals.end());
  const double tie = 1e-14 * std::max(1.0, std::abs(best));
  std::size_t i = 0;
  while (vals[i] < best - tie) ++i;

  // Refine between the neighbouring nodes.
  const double a = i > 0 ? nodes[i - 1] : nodes[i];
  const double b = i + 1 < nodes.size() ? nodes[i + 1] : nodes[i];
  double arg = nodes[i];
  double val = vals[i];
  if (b > a) {
    const auto r = boost::math::tools::brent_find_minima(
        [&](double l) { return -objective(l); }, a, b, std::numeric_limits<double>::digits / 2);
    if (-r.second > val + tie) {
      arg = r.first;
      val = -r.second;
    }
  }
  return {arg, val};
}

double FluxTable::fstar(double v) const {
  if (v <= 0.0) {
    if (!rho_c_finite()) throw DomainError("f*(v) for v <= 0 needs a finite critical density");
    return drift() * rbar_.floor() - v * rho_c();
  }
  const double hi = rho_c_finite() ? rbar_.floor() : lambda_.back();
  return maximize(v, hi).second;
}

double FluxTable::fstar_restricted(double v, double lambda_cap) const {
  if (!(lambda_cap >= 0.0) || lambda_cap > rbar_.floor()) throw DomainError("Lambda must lie in [0,c]");
  if (lambda_cap == 0.0) return 0.0;
  if (lambda_cap == rbar_.floor()) return fstar(v);
  if (v <= 0.0) return drift() * lambda_cap - v * rbar_(lambda_cap);
  return maximize(v, lambda_cap).second;
}

std::pair<double, double> FluxTable::fan(double v) const {
  if (v < 0.0) throw DomainError("fan is defined for v >= 0");
  const double c = rbar_.floor();
  if (v == 0.0) return {rho_c(), c};
  const double hi = rho_c_finite() ? c : lambda_.back();
  const double l = maximize(v, hi).first;
  return {rbar_(l), l};
}

double FluxTable::lambda_minus(double v, double lambda_cap) const {
  if (!(lambda_cap >= 0.0) || lambda_cap > rbar_.floor()) throw DomainError("Lambda must lie in [0,c]");
  if (v < 0.0) throw DomainError("fan is defined for v >= 0");
  if (lambda_cap == 0.0) return 0.0;
  if (v == 0.0) return lambda_cap;
  return maximize(v, lambda_cap).first;
}

void FluxTable::build_front() {
  const double c = rbar_.floor();
  const double rc = rho_c();
  const double d = drift();
  FrontSpeed fs{};

  double inf_ratio = kInf;
  for (std::size_t i = 0; i + 1 < lambda_.size(); ++i)
    inf_ratio = std::min(inf_ratio, (c - lambda_[i]) / (rc - rbar_table_[i]));
  fs.v0_grid = d * inf_ratio;

  // Difference quotients D(h) = (R̄(c) - R̄(c - h)) / h, h = c 2^-k.
  auto quotient = [&](int k) {
    const double h = c * std::ldexp(1.0, -k);
    return (rc - rbar_(c - h)) / h;
  };
  std::vector<double> deep;
  for (int k = 14; k <= 22; ++k) deep.push_back(quotient(k));
  const double i1 = deep[deep.size() - 1] - deep[deep.size() - 2];
  const double i0 = deep[deep.size() - 2] - deep[deep.size() - 3];
  // Log-type growth keeps adding a constant per halving of h.
  const bool unbounded = i1 > 1e-6 * deep.back() && i0 > 0.0 && i1 / i0 > kStallRatio;
  if (unbounded) {
    fs.rbar_prime = kInf;
  } else {
    // Repeated Richardson on h = c 2^-k, k = 8..13, error expansion in powers of h.
    std::vector<double> t;
    for (int k = 8; k <= 13; ++k) t.push_back(quotient(k));
    for (std::size_t m = 1; m < t.size(); ++m) {
      const double factor = std::ldexp(1.0, static_cast<int>(m));
      for (std::size_t k = t.size() - 1; k >= m; --k) t[k] = (factor * t[k] - t[k - 1]) / (factor - 1.0);
    }
    fs.rbar_prime = t.back();
  }

  if (std::isinf(fs.rbar_prime)) {
    fs.margin = kInf;
    fs.holds_h = true;
    fs.v0 = 0.0;
  } else {
    double margin = kInf;
    for (std::size_t i = 0; i < lambda_.size() && lambda_[i] <= c - delta_h_; ++i)
      margin = std::min(margin, rbar_table_[i] - rc - (lambda_[i] - c) * fs.rbar_prime);
    fs.margin = margin;
    fs.holds_h = margin > 0.0;
    fs.v0 = fs.holds_h ? d / fs.rbar_prime : fs.v0_grid;
  }
  front_ = fs;
  has_front_ = true;
}

const FluxTable::FrontSpeed& FluxTable::front() const {
  if (!has_front_) throw DomainError("front speed needs a finite critical density");
  return front_;
}

nlohmann::json FluxTable::header() const {
  nlohmann::json j = {{"c", floor()}, {"p", p_}, {"q", q()}, {"rho_c", finite_or_string(rho_c())},
                      {"delta_h", delta_h_}, {"critical_estimate", rbar_.critical_report()},
                      {"g", rbar_.g().to_json()}, {"Q", rbar_.law().to_json()}};
  if (has_front_) {
    j["v0"] = front_.v0;
    j["v0_grid"] = front_.v0_grid;
    j["RbarPrimePlusC"] = finite_or_string(front_.rbar_prime);
    j["holdsH"] = front_.holds_h;
    j["margin"] = finite_or_string(front_.margin);
  } else {
    j["v0"] = nullptr;
    j["holdsH"] = nullptr;
    j["margin"] = nullptr;
  }
  return j;
}

void FluxTable::write_csv(const std::filesystem::path& csv) const {
  std::ofstream out(csv);
  if (!out) throw ConfigError("cannot write " + csv.string());
  out.precision(17);
  out << "lambda,Rbar,rho,f,v,fstar,fhat,Rv\n";
  const std::size_t n = std::max(lambda_.size(), v_.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (i < lambda_.size()) {
      out << lambda_[i] << ',' << rbar_table_[i] << ',' << rbar_table_[i] << ',' << f_[i] << ',';
    } else {
      out << ",,,,";
    }
    if (i < v_.size()) {
      out << v_[i] << ',' << fstar_[i] << ',';
    } else {
      out << ",,";
    }
    if (i < fhat_.size()) out << fhat_[i];
    out << ',';
    if (i < fan_.size()) {
      if (std::isfinite(fan_[i])) {
        out << fan_[i];
      } else {
        out << "inf";
      }
    }
    out << '\n';
  }
}

void FluxTable::write_json(const std::filesystem::path& json) const {
  std::ofstream out(json);
  if (!out) throw ConfigError("cannot write " + json.string());
  out << header().dump(2) << '\n';
}

std::vector<double> concave_envelope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw ConfigError("envelope needs matching x and y");
  const std::size_t n = x.size();
  if (n <= 2) return y;
  for (std::size_t i = 1; i < n; ++i)
    if (!(x[i] > x[i - 1])) throw ConfigError("envelope abscissae must increase");
  // Monotone chain, upper hull.
  std::vector<std::size_t> hull;
  for (std::size_t i = 0; i < n; ++i) {
    while (hull.size() >= 2) {
      const auto a = hull[hull.size() - 2];
      const auto b = hull.back();
      const double cross = (x[b] - x[a]) * (y[i] - y[a]) - (y[b] - y[a]) * (x[i] - x[a]);
      if (cross >= 0.0) {
        hull.pop_back();
      } else {
        break;
      }
    }
    hull.push_back(i);
  }
  std::vector<double> out(n);
  std::size_t seg = 0;
  for (std::size_t i = 0; i < n; ++i) {
    while (seg + 1 < hull.size() && x[hull[seg + 1]] < x[i]) ++seg;
    if (seg + 1 >= hull.size()) {
      out[i] = y[hull.back()];
      continue;
    }
    const auto a = hull[seg];
    const auto b = hull[seg + 1];
    const double t = (x[i] - x[a]) / (x[b] - x[a]);
    out[i] = std::max(y[i], y[a] + t * (y[b] - y[a]));
  }
  return out;
}

double biconjugate(const FluxTable& table, double rho) {
  double best = kInf;
  const auto& v = table.v_grid();
  const auto& fs = table.fstar_table();
  for (std::size_t j = 0; j < v.size(); ++j) best = std::min(best, rho * v[j] + fs[j]);
  return best;
}

}  // namespace zrp
