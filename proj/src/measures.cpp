#include "zrp/measures.hpp"

#include <cmath>
#include <map>

#include "zrp/errors.hpp"

namespace zrp {

ProductMeasure::ProductMeasure(Window window, const RateFunction& g,
                               std::span<const double> fugacity)
    : window_(window), phi_(fugacity.begin(), fugacity.end()), index_(window.size(), -1) {
  if (phi_.size() != window_.size()) throw ConfigError("one fugacity per site required");
  // Environments repeat values heavily; share one table per distinct fugacity.
  std::map<double, int> seen;
  for (std::size_t i = 0; i < phi_.size(); ++i) {
    const double f = phi_[i];
    if (std::isinf(f)) continue;
    auto [it, inserted] = seen.try_emplace(f, static_cast<int>(laws_.size()));
    if (inserted) laws_.emplace_back(g, f);
    index_[i] = it->second;
  }
}

ProductMeasure ProductMeasure::equilibrium(const Environment& env, const RateFunction& g,
                                           double lambda) {
  if (!(lambda >= 0.0)) throw DomainError("fugacity must be nonnegative");
  if (lambda > env.floor())
    throw DomainError("supercritical parameter: lambda / alpha(x) >= 1 possible");
  std::vector<double> phi(env.window().size());
  for (std::size_t i = 0; i < phi.size(); ++i) phi[i] = lambda / env.values()[i];
  return ProductMeasure(env.window(), g, phi);
}

const SingleSiteLaw& ProductMeasure::law(std::int64_t x) const {
  const int k = index_[window_.index(x)];
  if (k < 0) throw DomainError("source site has no single-site law");
  return laws_[static_cast<std::size_t>(k)];
}

double ProductMeasure::mean(std::int64_t x) const {
  return is_source(x) ? std::numeric_limits<double>::infinity() : law(x).mean();
}

Configuration ProductMeasure::sample(std::span<const double> uniforms, Edge left, Edge right) const {
  if (uniforms.size() != window_.size()) throw ConfigError("one uniform per site required");
  std::vector<Occupancy> occ(window_.size());
  for (std::size_t i = 0; i < occ.size(); ++i) {
    const int k = index_[i];
    occ[i] = k < 0 ? Occupancy::infinite()
                   : Occupancy(laws_[static_cast<std::size_t>(k)].quantile(uniforms[i]));
  }
  return Configuration(window_, std::move(occ), left, right);
}

Configuration ProductMeasure::sample(Rng& rng, Edge left, Edge right) const {
  return sample(uniform_field(rng, window_.size()), left, right);
}

Configuration sample_product_measure(const Environment& env, const RateFunction& g, double lambda,
                                     std::span<const double> uniforms, Edge left, Edge right) {
  return ProductMeasure::equilibrium(env, g, lambda).sample(uniforms, left, right);
}

std::vector<double> uniform_field(Rng& rng, std::size_t n) {
  std::vector<double> u(n);
  for (auto& x : u) x = rng.uniform();
  return u;
}

}  // namespace zrp
