#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "zrp/configuration.hpp"
#include "zrp/environment.hpp"
#include "zrp/measures.hpp"

namespace zrp {

/// Solution of the traffic equations lambda(x) = p lambda(x-1) + q lambda(x+1)
/// on the free sites of a window, with lambda = alpha on the source set S and
/// the edge reservoir rates (0 for sinks) just outside the window.
struct TrafficSolution {
  Window window;
  std::vector<std::int64_t> sources;  // S, increasing
  std::vector<bool> in_source;        // per window site
  std::vector<double> alpha;          // per window site
  std::vector<double> lambda;         // per window site; alpha on S
  double p = 1.0;
  Edge left = Edge::sink();
  Edge right = Edge::sink();
  double max_residual = 0.0;
  /// lambda < alpha on every free site.
  bool recurrent = false;

  bool is_source(std::int64_t x) const { return in_source[window.index(x)]; }
  double at(std::int64_t x) const { return lambda[window.index(x)]; }
  std::vector<std::int64_t> free_sites() const;
  /// lambda at x, extended by the edge rates outside the window.
  double boundary_value(std::int64_t x) const;

  void write_csv(const std::filesystem::path& csv) const;
};

/// Direct tridiagonal solve, one block per run of free sites. Closed edges are
/// rejected. Throws InvariantError if a balance residual exceeds 1e-12.
TrafficSolution solve_traffic(const Environment& env, std::span<const std::int64_t> sources, double p,
                              Edge left = Edge::sink(), Edge right = Edge::sink());

struct HittingEstimate {
  double mean;
  double se;
  std::int64_t walks;
};

/// Monte Carlo of lambda(x) = E_x[alpha(X_T)] for the reversed walk (steps -1
/// with probability p) stopped at S or at the edge reservoirs.
HittingEstimate traffic_by_hitting(const Environment& env, std::span<const std::int64_t> sources, double p,
                                   std::int64_t x, std::int64_t walks, std::uint64_t seed,
                                   Edge left = Edge::sink(), Edge right = Edge::sink());

struct AugmentedSource {
  std::vector<std::int64_t> sources;  // S'
  Environment env;                    // alpha' = lambda on S' \ S
  std::vector<std::int64_t> added;
};

/// S' = S u {x free : lambda(x) >= alpha(x)}, alpha' = lambda on the new sites.
AugmentedSource augment_source(const Environment& env, const TrafficSolution& traffic);

/// Product measure with marginal theta_{lambda(x)/alpha(x)} on free sites and
/// infinite occupancy on S. Throws DomainError unless recurrent.
ProductMeasure stationary_measure(const Environment& env, const TrafficSolution& traffic,
                                  const RateFunction& g);

struct BarrierResult {
  std::vector<std::int64_t> sources;  // S_{eps,delta}
  TrafficSolution traffic;
  AugmentedSource augmented;
  TrafficSolution augmented_traffic;
  std::vector<std::pair<std::int64_t, double>> reported;  // (x, lambda_{eps,delta}(x)) for x in F
};

/// S = {alpha < c + eps or |x| > 1/delta}; solve, augment and report lambda on F.
BarrierResult barrier_construction(const Environment& env, double epsilon, double delta, double p,
                                   std::span<const std::int64_t> report_sites);

struct DeltaChoice {
  double delta;
  double slow_exit_fraction;
  std::int64_t radius;  // floor(1/delta)
};

/// Largest delta (smallest radius 1/delta, doubling from `start_radius`) such
/// that the reversed walk from x0 stops at a slow site in at least `target` of
/// the walks. Heuristic stand-in for a non-constructive existence statement.
DeltaChoice choose_delta(const Environment& env, double epsilon, double p, std::int64_t x0,
                         std::uint64_t seed, double target = 0.99, std::int64_t walks = 10000,
                         std::int64_t start_radius = 8);

}  // namespace zrp
