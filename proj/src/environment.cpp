#include "zrp/environment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <unordered_map>

#include "zrp/errors.hpp"
#include "zrp/rng.hpp"

namespace zrp {

// ---------------------------------------------------------------------------
// RateLaw

RateLaw RateLaw::point(double a) { return atoms({a}, {1.0}); }

RateLaw RateLaw::atoms(std::vector<double> values, std::vector<double> weights) {
  if (values.empty() || values.size() != weights.size())
    throw ConfigError("atoms need matching nonempty value and weight lists");
  double total = 0.0;
  for (double w : weights) {
    if (!(w > 0.0)) throw ConfigError("atom weights must be positive");
    total += w;
  }
  RateLaw q;
  q.family_ = Family::atoms;
  for (std::size_t i = 0; i < values.size(); ++i) q.atoms_.emplace_back(values[i], weights[i] / total);
  std::sort(q.atoms_.begin(), q.atoms_.end());
  q.lo_ = q.atoms_.front().first;
  q.hi_ = q.atoms_.back().first;
  return q;
}

RateLaw RateLaw::power(double lo, double hi, double kappa) {
  if (!(lo < hi)) throw ConfigError("power law needs lo < hi");
  if (!(kappa > 0.0)) throw ConfigError("power law exponent must be positive");
  RateLaw q;
  q.family_ = Family::power;
  q.lo_ = lo;
  q.hi_ = hi;
  q.kappa_ = kappa;
  return q;
}

double RateLaw::cdf(double a) const {
  if (family_ == Family::power) {
    if (a <= lo_) return 0.0;
    if (a >= hi_) return 1.0;
    return std::pow((a - lo_) / (hi_ - lo_), kappa_);
  }
  double acc = 0.0;
  for (const auto& [v, w] : atoms_) {
    if (v > a) break;
    acc += w;
  }
  return std::min(acc, 1.0);
}

double RateLaw::quantile(double u) const {
  if (!(u > 0.0) || u > 1.0) throw DomainError("quantile level must lie in (0,1]");
  if (family_ == Family::power) return lo_ + (hi_ - lo_) * std::pow(u, 1.0 / kappa_);
  double acc = 0.0;
  for (const auto& [v, w] : atoms_) {
    acc += w;
    if (acc >= u) return v;
  }
  return atoms_.back().first;
}

double RateLaw::lower() const { return lo_; }
double RateLaw::upper() const { return hi_; }

double RateLaw::mean() const {
  if (family_ == Family::power) return lo_ + (hi_ - lo_) * kappa_ / (kappa_ + 1.0);
  double m = 0.0;
  for (const auto& [v, w] : atoms_) m += v * w;
  return m;
}

void RateLaw::check_support(double c) const {
  // A continuous law may start exactly at c: it gives no mass to {c}.
  const bool low_ok = family_ == Family::power ? lo_ >= c : lo_ > c;
  if (!low_ok) throw ConfigError("rate law charges (-inf, c]: its support must lie in (c,1]");
  if (hi_ > 1.0) throw ConfigError("rate law charges values above 1");
}

nlohmann::json RateLaw::to_json() const {
  if (family_ == Family::power) return {{"family", "power"}, {"lo", lo_}, {"hi", hi_}, {"kappa", kappa_}};
  nlohmann::json values = nlohmann::json::array();
  nlohmann::json weights = nlohmann::json::array();
  for (const auto& [v, w] : atoms_) {
    values.push_back(v);
    weights.push_back(w);
  }
  return {{"family", "atoms"}, {"values", values}, {"weights", weights}};
}

RateLaw RateLaw::from_json(const nlohmann::json& j) {
  const auto family = j.at("family").get<std::string>();
  if (family == "power") return power(j.at("lo"), j.at("hi"), j.value("kappa", 1.0));
  if (family == "uniform") return uniform(j.at("lo"), j.at("hi"));
  if (family == "point") return point(j.at("value"));
  if (family == "atoms")
    return atoms(j.at("values").get<std::vector<double>>(), j.at("weights").get<std::vector<double>>());
  throw ConfigError("unknown rate law family '" + family + "'");
}

// ---------------------------------------------------------------------------
// Environment

Environment::Environment(double floor, Window window, std::vector<double> alpha,
                         nlohmann::json metadata)
    : floor_(floor), window_(window), alpha_(std::move(alpha)), metadata_(std::move(metadata)) {
  if (!(floor > 0.0 && floor < 1.0)) throw ConfigError("environment floor c must lie in (0,1)");
  if (alpha_.size() != window_.size())
    throw ConfigError("environment table size does not match window " + window_.str());
  for (std::size_t i = 0; i < alpha_.size(); ++i) {
    if (!(alpha_[i] > floor_) || alpha_[i] > 1.0) {
      std::ostringstream msg;
      msg << "alpha(" << window_.site(i) << ") = " << alpha_[i] << " outside (c,1] with c = " << floor_;
      throw InvariantError(msg.str());
    }
  }
}

Environment Environment::constant(double floor, Window window, double value) {
  return Environment(floor, window, std::vector<double>(window.size(), value),
                     {{"generator", "constant"}, {"value", value}});
}

Environment Environment::with_values(
    const std::vector<std::pair<std::int64_t, double>>& changes) const {
  auto alpha = alpha_;
  for (const auto& [x, a] : changes) {
    if (!window_.contains(x)) throw ConfigError("override site outside environment window");
    alpha[window_.index(x)] = a;
  }
  auto meta = metadata_;
  meta["modified_sites"] = changes.size();
  return Environment(floor_, window_, std::move(alpha), std::move(meta));
}

Environment Environment::restricted(Window sub) const {
  if (!window_.contains(sub)) throw ConfigError("sub-window " + sub.str() + " not inside " + window_.str());
  std::vector<double> alpha(alpha_.begin() + static_cast<std::ptrdiff_t>(window_.index(sub.first)),
                            alpha_.begin() + static_cast<std::ptrdiff_t>(window_.index(sub.last)) + 1);
  return Environment(floor_, sub, std::move(alpha), metadata_);
}

void Environment::write_csv(const std::filesystem::path& csv) const {
  std::ofstream out(csv);
  if (!out) throw ConfigError("cannot write " + csv.string());
  out << "site,alpha\n";
  out.precision(17);
  for (std::size_t i = 0; i < alpha_.size(); ++i) out << window_.site(i) << ',' << alpha_[i] << '\n';
}

void Environment::write_sidecar(const std::filesystem::path& json) const {
  std::ofstream out(json);
  if (!out) throw ConfigError("cannot write " + json.string());
  nlohmann::json j = metadata_;
  j["c"] = floor_;
  j["window"] = {window_.first, window_.last};
  if (!j.contains("generator")) j["generator"] = "table";
  if (!j.contains("seed")) j["seed"] = nullptr;
  out << j.dump(2) << '\n';
}

Environment Environment::read(const std::filesystem::path& csv, const std::filesystem::path& sidecar) {
  std::ifstream js(sidecar);
  if (!js) throw ConfigError("cannot read " + sidecar.string());
  const auto meta = nlohmann::json::parse(js);
  const double c = meta.at("c");
  const Window w{meta.at("window").at(0).get<std::int64_t>(), meta.at("window").at(1).get<std::int64_t>()};

  std::ifstream in(csv);
  if (!in) throw ConfigError("cannot read " + csv.string());
  std::string line;
  std::getline(in, line);
  if (line != "site,alpha") throw ConfigError("environment CSV must start with header 'site,alpha'");
  std::vector<double> alpha(w.size(), std::numeric_limits<double>::quiet_NaN());
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ConfigError("malformed environment row: " + line);
    const auto x = std::stoll(line.substr(0, comma));
    if (!w.contains(x)) throw ConfigError("environment row outside declared window: " + line);
    alpha[w.index(x)] = std::stod(line.substr(comma + 1));
  }
  for (std::size_t i = 0; i < alpha.size(); ++i)
    if (std::isnan(alpha[i])) throw ConfigError("environment CSV misses site " + std::to_string(w.site(i)));
  return Environment(c, w, std::move(alpha), meta);
}

// ---------------------------------------------------------------------------
// Defect schedule

DefectSchedule DefectSchedule::polynomial(int degree) {
  if (degree < 2) throw ConfigError("defect schedule degree must be >= 2 (gaps must grow)");
  DefectSchedule s;
  s.degree_ = degree;
  return s;
}

DefectSchedule DefectSchedule::explicit_points(std::vector<std::int64_t> points) {
  DefectSchedule s;
  s.degree_ = 0;
  s.points_ = std::move(points);
  if (s.points_.size() < 2) throw ConfigError("explicit defect schedule needs at least two points");
  return s;
}

std::int64_t DefectSchedule::point(std::size_t j) const {
  if (degree_ == 0) {
    if (j >= points_.size()) throw ConfigError("window not covered by defect schedule");
    return points_[j];
  }
  std::int64_t v = 1;
  for (int i = 0; i < degree_; ++i) v *= static_cast<std::int64_t>(j);
  return -v;
}

std::size_t DefectSchedule::realized() const {
  return degree_ == 0 ? points_.size() : std::numeric_limits<std::size_t>::max();
}

void DefectSchedule::validate(std::int64_t depth) const {
  if (point(0) != 0) throw ConfigError("defect schedule must start at x_0 = 0");
  std::int64_t prev_gap = 0;
  double prev_ratio = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; point(j) > depth || j == 0; ++j) {
    const auto a = point(j);
    const auto b = point(j + 1);
    if (!(b < a)) throw ConfigError("defect schedule must be strictly decreasing");
    const auto gap = a - b;
    if (gap < prev_gap) throw ConfigError("defect schedule gaps must be nondecreasing");
    prev_gap = gap;
    if (j >= 1) {
      const double ratio = static_cast<double>(b) / static_cast<double>(a);
      if (ratio > prev_ratio + 1e-12)
        throw ConfigError("defect schedule ratios x_{j+1}/x_j must decrease toward 1");
      prev_ratio = ratio;
    }
  }
}

std::pair<std::size_t, std::int64_t> DefectSchedule::locate(std::int64_t x) const {
  if (x >= 0) throw DomainError("locate expects a negative site");
  std::size_t j = 0;
  if (degree_ == 0) {
    // points_ decreasing: first index with points_[j+1] <= x
    auto it = std::upper_bound(points_.begin(), points_.end(), x, std::greater<>());
    if (it == points_.end()) throw ConfigError("window not covered by defect schedule");
    j = static_cast<std::size_t>(it - points_.begin()) - 1;
  } else {
    const double mag = static_cast<double>(-x);
    j = static_cast<std::size_t>(std::max(0.0, std::floor(std::pow(mag, 1.0 / degree_)) - 1.0));
    while (point(j + 1) > x) ++j;
    while (j > 0 && point(j) <= x) --j;
  }
  return {j, point(j) - x};
}

nlohmann::json DefectSchedule::to_json() const {
  if (degree_ == 0) return {{"kind", "explicit"}, {"points", points_}};
  return {{"kind", "polynomial"}, {"degree", degree_}};
}

DefectSchedule DefectSchedule::from_json(const nlohmann::json& j) {
  const auto kind = j.value("kind", std::string("polynomial"));
  if (kind == "polynomial") return polynomial(j.value("degree", 2));
  if (kind == "explicit") return explicit_points(j.at("points").get<std::vector<std::int64_t>>());
  throw ConfigError("unknown defect schedule kind '" + kind + "'");
}

double defect_level(const DefectSchedule& schedule, std::int64_t x) {
  if (x == 0) throw DomainError("beta is undefined at the origin");
  const auto [j, k] = schedule.locate(x < 0 ? x : -x);
  const auto gap = schedule.point(j) - schedule.point(j + 1);
  return static_cast<double>(k) / static_cast<double>(gap + 1);
}

// ---------------------------------------------------------------------------
// Builders

Environment build_iid_environment(double c, const RateLaw& q, Window window,
                                  std::span<const double> uniforms) {
  q.check_support(c);
  if (uniforms.size() != window.size()) throw ConfigError("need one uniform per site");
  std::vector<double> alpha(window.size());
  for (std::size_t i = 0; i < alpha.size(); ++i) alpha[i] = q.quantile(uniforms[i]);
  return Environment(c, window, std::move(alpha), {{"generator", "iid"}, {"law", q.to_json()}});
}

Environment build_iid_environment(double c, const RateLaw& q, Window window, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0, StreamTag::environment));
  std::vector<double> u(window.size());
  for (auto& x : u) x = rng.uniform();
  auto env = build_iid_environment(c, q, window, u);
  auto meta = env.metadata();
  meta["seed"] = seed;
  return Environment(c, window, {env.values().begin(), env.values().end()}, std::move(meta));
}

Environment build_sparse_defect_environment(double c, const RateLaw& q,
                                            const DefectSchedule& schedule, Window window) {
  q.check_support(c);
  const auto depth = -std::max(std::abs(window.first), std::abs(window.last));
  schedule.validate(depth);
  // Levels repeat heavily, so cache F_Q^{-1}(k / (gap + 1)) per (gap, k).
  std::vector<double> alpha(window.size());
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    const auto x = window.site(i);
    alpha[i] = x == 0 ? 1.0 : q.quantile(defect_level(schedule, x));
  }
  return Environment(c, window, std::move(alpha),
                     {{"generator", "sparse-defect"}, {"law", q.to_json()}, {"schedule", schedule.to_json()}});
}

// ---------------------------------------------------------------------------
// Slow sites

SlowSites slow_site_boundaries(const Environment& env, double epsilon) {
  const auto& w = env.window();
  const double level = env.floor() + epsilon;
  std::optional<std::int64_t> left;
  std::optional<std::int64_t> right;
  for (std::int64_t x = std::min<std::int64_t>(0, w.last); x >= w.first; --x) {
    if (env(x) <= level) {
      left = x;
      break;
    }
  }
  for (std::int64_t x = std::max<std::int64_t>(0, w.first); x <= w.last; ++x) {
    if (env(x) <= level) {
      right = x;
      break;
    }
  }
  if (!left || !right)
    throw ConfigError("window too small for eps = " + std::to_string(epsilon) +
                      ": no site with alpha <= c + eps on the " + (!left ? "left" : "right"));
  return {*left, *right};
}

bool SlowSiteDensityReport::all_trending() const {
  return std::all_of(trends.begin(), trends.end(), [](const auto& t) { return t.second; });
}

SlowSiteDensityReport check_slow_site_density(const Environment& env,
                                              std::span<const double> epsilons,
                                              std::span<const std::int64_t> ns, double slack) {
  SlowSiteDensityReport report;
  report.slack = slack;
  const auto& w = env.window();
  for (double eps : epsilons) {
    double first_min = 0.0;
    double last_min = 0.0;
    for (std::size_t i = 0; i < ns.size(); ++i) {
      const auto n = ns[i];
      if (!w.contains(-n)) throw ConfigError("window does not cover -" + std::to_string(n));
      const auto hi = static_cast<std::int64_t>(std::floor(-static_cast<double>(n) * (1.0 - eps)));
      double m = std::numeric_limits<double>::infinity();
      for (std::int64_t x = -n; x <= std::min<std::int64_t>(hi, 0); ++x) m = std::min(m, env(x));
      report.rows.push_back({eps, n, m});
      if (i == 0) first_min = m;
      last_min = m;
    }
    const bool ok = !ns.empty() && last_min - env.floor() <= slack && last_min <= first_min;
    report.trends.emplace_back(eps, ok);
  }
  return report;
}

AnnealedAverages empirical_annealed_density(const Environment& env, const RateFunction& g,
                                            double lambda, std::int64_t n) {
  if (!(lambda >= 0.0)) throw DomainError("fugacity must be nonnegative");
  if (lambda >= env.floor()) throw DomainError("annealed average needs lambda < c");
  const auto& w = env.window();
  if (!w.contains(-n) || !w.contains(n)) throw ConfigError("window does not cover [-n, n]");
  std::unordered_map<double, double> cache;
  auto r = [&](double a) {
    auto [it, inserted] = cache.try_emplace(a, 0.0);
    if (inserted) it->second = mean_density(g, lambda / a);
    return it->second;
  };
  double left = 0.0;
  double right = 0.0;
  for (std::int64_t x = 0; x <= n; ++x) {
    left += r(env(-x));
    right += r(env(x));
  }
  const auto denom = static_cast<double>(n + 1);
  return {left / denom, right / denom};
}

}  // namespace zrp
