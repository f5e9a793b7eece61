#include "zrp/stats.hpp"

#include <algorithm>
#include <numeric>

#include "zrp/errors.hpp"

namespace zrp {

void Histogram::add(std::int64_t k) {
  if (k < 0) throw DomainError("histogram values must be nonnegative");
  const auto i = static_cast<std::size_t>(k);
  if (i >= counts_.size()) counts_.resize(i + 1, 0);
  ++counts_[i];
  ++total_;
}

std::vector<double> Histogram::pmf() const {
  std::vector<double> p(counts_.size());
  for (std::size_t i = 0; i < p.size(); ++i)
    p[i] = static_cast<double>(counts_[i]) / static_cast<double>(total_);
  return p;
}

TvResult compare_distributions(std::span<const double> empirical, std::span<const double> target,
                               double tolerance, double norm_tol) {
  const double se = std::accumulate(empirical.begin(), empirical.end(), 0.0);
  const double st = std::accumulate(target.begin(), target.end(), 0.0);
  if (std::abs(se - 1.0) > norm_tol) throw DomainError("empirical pmf is not normalized");
  if (st > 1.0 + norm_tol) throw DomainError("target pmf has mass above 1");
  if (st < 1.0 - std::max(norm_tol, 1e-6)) throw DomainError("target pmf is not normalized");

  const std::size_t n = std::max(empirical.size(), target.size());
  double tv = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double a = k < empirical.size() ? empirical[k] : 0.0;
    double b = k < target.size() ? target[k] : 0.0;
    if (k + 1 == n) b += 1.0 - st;  // truncated target tail
    tv += std::abs(a - b);
  }
  tv *= 0.5;
  return {tv, tv <= tolerance};
}

}  // namespace zrp
