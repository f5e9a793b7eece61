#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "zrp/configuration.hpp"
#include "zrp/environment.hpp"
#include "zrp/rates.hpp"
#include "zrp/rng.hpp"

namespace zrp {

/// Product measure on a window with marginal theta_{phi(x)} at each site.
/// A site with phi = +inf is a source site and always holds infinitely many
/// particles.
class ProductMeasure {
 public:
  static constexpr double kSource = std::numeric_limits<double>::infinity();

  ProductMeasure(Window window, const RateFunction& g, std::span<const double> fugacity);

  /// mu_lambda^alpha: marginal theta_{lambda / alpha(x)}. Requires lambda <= c.
  static ProductMeasure equilibrium(const Environment& env, const RateFunction& g, double lambda);

  const Window& window() const { return window_; }
  bool is_source(std::int64_t x) const { return index_[window_.index(x)] < 0; }
  /// Fugacity phi(x) of the marginal at x.
  double fugacity(std::int64_t x) const { return phi_[window_.index(x)]; }
  const SingleSiteLaw& law(std::int64_t x) const;
  /// R(phi(x)); +inf on source sites.
  double mean(std::int64_t x) const;

  /// Inversion sample: eta(x) = F^{-1}_{phi(x)}(u_x), one level per site.
  Configuration sample(std::span<const double> uniforms, Edge left = Edge::sink(),
                       Edge right = Edge::sink()) const;
  Configuration sample(Rng& rng, Edge left = Edge::sink(), Edge right = Edge::sink()) const;

 private:
  Window window_;
  std::vector<double> phi_;
  std::vector<int> index_;  // into laws_, -1 for source sites
  std::vector<SingleSiteLaw> laws_;
};

/// eta(x) = F^{-1}_{lambda/alpha(x)}(u_x). Throws DomainError for lambda > c.
Configuration sample_product_measure(const Environment& env, const RateFunction& g, double lambda,
                                     std::span<const double> uniforms, Edge left = Edge::sink(),
                                     Edge right = Edge::sink());

/// One uniform level per site of a window.
std::vector<double> uniform_field(Rng& rng, std::size_t n);

}  // namespace zrp
