#include "zrp/jackson.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "zrp/errors.hpp"
#include "zrp/rng.hpp"
#include "zrp/stats.hpp"

namespace zrp {

namespace {

constexpr double kResidualBound = 1e-12;
constexpr std::int64_t kStepCap = 100'000'000;

double edge_value(const Edge& e) {
  if (e.kind == Edge::Kind::closed) throw ConfigError("closed edges have no traffic interpretation");
  return e.kind == Edge::Kind::source ? e.rate : 0.0;
}

std::vector<bool> source_mask(const Window& w, std::span<const std::int64_t> sources) {
  std::vector<bool> mask(w.size(), false);
  for (auto x : sources) {
    if (!w.contains(x)) throw ConfigError("source site " + std::to_string(x) + " outside window");
    mask[w.index(x)] = true;
  }
  return mask;
}

}  // namespace

std::vector<std::int64_t> TrafficSolution::free_sites() const {
  std::vector<std::int64_t> out;
  for (std::size_t i = 0; i < in_source.size(); ++i)
    if (!in_source[i]) out.push_back(window.site(i));
  return out;
}

double TrafficSolution::boundary_value(std::int64_t x) const {
  if (window.contains(x)) return at(x);
  return x < window.first ? edge_value(left) : edge_value(right);
}

void TrafficSolution::write_csv(const std::filesystem::path& csv) const {
  std::ofstream out(csv);
  if (!out) throw ConfigError("cannot write " + csv.string());
  out.precision(17);
  out << "site,lambda,alpha,in_S\n";
  for (std::size_t i = 0; i < lambda.size(); ++i)
    out << window.site(i) << ',' << lambda[i] << ',' << alpha[i] << ',' << (in_source[i] ? 1 : 0) << '\n';
}

TrafficSolution solve_traffic(const Environment& env, std::span<const std::int64_t> sources, double p,
                              Edge left, Edge right) {
  if (!(p > 0.5 && p <= 1.0)) throw ConfigError("p must lie in (1/2, 1]");
  const auto& w = env.window();
  TrafficSolution sol;
  sol.window = w;
  sol.p = p;
  sol.left = left;
  sol.right = right;
  sol.in_source = source_mask(w, sources);
  sol.sources.assign(sources.begin(), sources.end());
  std::sort(sol.sources.begin(), sol.sources.end());
  sol.sources.erase(std::unique(sol.sources.begin(), sol.sources.end()), sol.sources.end());
  sol.alpha.assign(env.values().begin(), env.values().end());
  sol.lambda = sol.alpha;
  const double q = 1.0 - p;
  const double lv = edge_value(left);
  const double rv = edge_value(right);
  const std::size_t n = w.size();
  if (sol.sources.size() == n) throw ConfigError("no free sites: every site is a source");

  // Thomas algorithm on each maximal run [i0, i1] of free sites:
  //   lambda_i - p lambda_{i-1} - q lambda_{i+1} = 0.
  std::size_t i = 0;
  std::vector<double> cp, dp;
  while (i < n) {
    if (sol.in_source[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < n && !sol.in_source[j + 1]) ++j;
    const std::size_t m = j - i + 1;
    const double below = i == 0 ? lv : sol.alpha[i - 1];
    const double above = j + 1 == n ? rv : sol.alpha[j + 1];
    cp.assign(m, 0.0);
    dp.assign(m, 0.0);
    for (std::size_t k = 0; k < m; ++k) {
      const double rhs = (k == 0 ? p * below : 0.0) + (k + 1 == m ? q * above : 0.0);
      const double prev_c = k == 0 ? 0.0 : cp[k - 1];
      const double prev_d = k == 0 ? 0.0 : dp[k - 1];
      const double denom = 1.0 + p * prev_c;
      if (!(std::abs(denom) > 1e-300)) throw InvariantError("singular traffic system");
      cp[k] = -q / denom;
      dp[k] = (rhs + p * prev_d) / denom;
    }
    sol.lambda[j] = dp[m - 1];
    for (std::size_t k = m - 1; k-- > 0;) sol.lambda[i + k] = dp[k] - cp[k] * sol.lambda[i + k + 1];
    i = j + 1;
  }

  sol.recurrent = true;
  for (std::size_t k = 0; k < n; ++k) {
    if (sol.in_source[k]) continue;
    const auto x = w.site(k);
    const double res = sol.lambda[k] - p * sol.boundary_value(x - 1) - q * sol.boundary_value(x + 1);
    sol.max_residual = std::max(sol.max_residual, std::abs(res));
    sol.recurrent = sol.recurrent && sol.lambda[k] < sol.alpha[k];
  }
  if (sol.max_residual > kResidualBound)
    throw InvariantError("traffic balance residual " + std::to_string(sol.max_residual));
  return sol;
}

HittingEstimate traffic_by_hitting(const Environment& env, std::span<const std::int64_t> sources, double p,
                                   std::int64_t x, std::int64_t walks, std::uint64_t seed, Edge left,
                                   Edge right) {
  const auto& w = env.window();
  const auto mask = source_mask(w, sources);
  if (!w.contains(x) || mask[w.index(x)]) throw ConfigError("walk must start at a free site");
  const double lv = edge_value(left);
  const double rv = edge_value(right);
  Rng rng(derive_seed(seed, 0, StreamTag::walks));
  RunningStats stats;
  for (std::int64_t k = 0; k < walks; ++k) {
    std::int64_t y = x;
    std::int64_t steps = 0;
    double value = 0.0;
    while (true) {
      y += rng.uniform() < p ? -1 : 1;
      if (++steps > kStepCap) throw InvariantError("reversed walk did not reach the source set");
      if (y < w.first) {
        value = lv;
        break;
      }
      if (y > w.last) {
        value = rv;
        break;
      }
      if (mask[w.index(y)]) {
        value = env(y);
        break;
      }
    }
    stats.add(value);
  }
  return {stats.mean(), stats.se(), walks};
}

AugmentedSource augment_source(const Environment& env, const TrafficSolution& traffic) {
  if (env.window() != traffic.window) throw ConfigError("traffic solution window mismatch");
  AugmentedSource out{traffic.sources, env, {}};
  std::vector<std::pair<std::int64_t, double>> changes;
  for (std::size_t i = 0; i < traffic.lambda.size(); ++i) {
    if (traffic.in_source[i]) continue;
    if (traffic.lambda[i] >= traffic.alpha[i]) {
      const auto x = traffic.window.site(i);
      out.added.push_back(x);
      changes.emplace_back(x, traffic.lambda[i]);
    }
  }
  if (changes.empty()) return out;
  out.env = env.with_values(changes);
  out.sources.insert(out.sources.end(), out.added.begin(), out.added.end());
  std::sort(out.sources.begin(), out.sources.end());
  return out;
}

ProductMeasure stationary_measure(const Environment& env, const TrafficSolution& traffic,
                                  const RateFunction& g) {
  if (!traffic.recurrent) throw DomainError("traffic solution is not recurrent: no invariant product measure");
  if (env.window() != traffic.window) throw ConfigError("traffic solution window mismatch");
  std::vector<double> phi(traffic.lambda.size());
  for (std::size_t i = 0; i < phi.size(); ++i)
    phi[i] = traffic.in_source[i] ? ProductMeasure::kSource : traffic.lambda[i] / env.values()[i];
  return ProductMeasure(traffic.window, g, phi);
}

BarrierResult barrier_construction(const Environment& env, double epsilon, double delta, double p,
                                   std::span<const std::int64_t> report_sites) {
  if (!(epsilon > 0.0) || !(delta > 0.0)) throw ConfigError("eps and delta must be positive");
  const auto& w = env.window();
  const auto radius = static_cast<std::int64_t>(std::floor(1.0 / delta));
  if (w.first > -radius - 1 || w.last < radius + 1)
    throw ConfigError("window too small: must contain [-1/delta - 1, 1/delta + 1]");
  const double level = env.floor() + epsilon;
  BarrierResult out{{}, {}, {{}, env, {}}, {}, {}};
  bool slow = false;
  for (auto x = w.first; x <= w.last; ++x) {
    const bool is_slow = env(x) < level;
    if (is_slow || std::abs(x) > radius) out.sources.push_back(x);
    slow = slow || (is_slow && std::abs(x) <= radius);
  }
  if (!slow) throw ConfigError("window too small: no site with alpha < c + eps inside [-1/delta, 1/delta]");
  if (out.sources.size() == w.size())
    throw ConfigError("degenerate barrier: every site has alpha < c + eps, so F must be empty");
  out.traffic = solve_traffic(env, out.sources, p);
  out.augmented = augment_source(env, out.traffic);
  out.augmented_traffic = solve_traffic(out.augmented.env, out.augmented.sources, p);
  for (auto x : report_sites) out.reported.emplace_back(x, out.augmented_traffic.at(x));
  return out;
}

DeltaChoice choose_delta(const Environment& env, double epsilon, double p, std::int64_t x0, std::uint64_t seed,
                         double target, std::int64_t walks, std::int64_t start_radius) {
  const auto& w = env.window();
  const double level = env.floor() + epsilon;
  Rng rng(derive_seed(seed, 1, StreamTag::walks));
  for (std::int64_t radius = std::max<std::int64_t>(start_radius, std::abs(x0) + 1);
       radius + 1 <= -w.first && radius + 1 <= w.last; radius *= 2) {
    std::int64_t slow_exits = 0;
    for (std::int64_t k = 0; k < walks; ++k) {
      std::int64_t y = x0;
      while (true) {
        if (std::abs(y) > radius) break;
        if (env(y) < level) {
          ++slow_exits;
          break;
        }
        y += rng.uniform() < p ? -1 : 1;
      }
    }
    const double frac = static_cast<double>(slow_exits) / static_cast<double>(walks);
    if (frac >= target) return {1.0 / (static_cast<double>(radius) + 0.5), frac, radius};
  }
  throw ConfigError("window too small: no radius reaches the slow-exit target");
}

}  // namespace zrp
