#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace zrp {

/// Welford mean and variance.
class RunningStats {
 public:
  void add(double x) {
    ++n_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (x - mean_);
  }
  std::int64_t count() const { return n_; }
  double mean() const { return mean_; }
  /// Unbiased sample variance.
  double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
  /// Standard error of the mean.
  double se() const { return n_ > 0 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0; }

 private:
  std::int64_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

/// Counts of nonnegative integer samples.
class Histogram {
 public:
  void add(std::int64_t k);
  std::int64_t total() const { return total_; }
  std::vector<double> pmf() const;

 private:
  std::vector<std::int64_t> counts_;
  std::int64_t total_ = 0;
};

struct TvResult {
  double distance;
  bool pass;
};

/// Total variation between an empirical pmf and a target pmf on {0,1,...}.
/// Target mass beyond the empirical support is added to the last bucket
/// compared. Throws DomainError if either input is off normalization by more
/// than `norm_tol`.
TvResult compare_distributions(std::span<const double> empirical, std::span<const double> target,
                               double tolerance, double norm_tol = 1e-9);

}  // namespace zrp
