#pragma once

#include <compare>
#include <cstdint>
#include <ostream>

namespace zrp {

/// Site occupancy in N u {+inf}. Infinity absorbs additions and removals.
class Occupancy {
 public:
  constexpr Occupancy() = default;
  constexpr explicit Occupancy(std::int64_t n) : count_(n) {}

  static constexpr Occupancy infinite() {
    Occupancy o;
    o.infinite_ = true;
    return o;
  }

  constexpr bool is_infinite() const { return infinite_; }
  constexpr bool is_finite() const { return !infinite_; }
  constexpr bool empty() const { return !infinite_ && count_ == 0; }
  /// Particle count; meaningless for infinite sites.
  constexpr std::int64_t count() const { return count_; }

  constexpr void add() {
    if (!infinite_) ++count_;
  }
  constexpr void remove() {
    if (!infinite_) --count_;
  }

  friend constexpr bool operator==(Occupancy a, Occupancy b) {
    if (a.infinite_ || b.infinite_) return a.infinite_ == b.infinite_;
    return a.count_ == b.count_;
  }
  friend constexpr std::strong_ordering operator<=>(Occupancy a, Occupancy b) {
    if (a.infinite_ || b.infinite_) return a.infinite_ <=> b.infinite_;
    return a.count_ <=> b.count_;
  }

  /// min(n, cap) as a real, with infinity mapped to cap.
  constexpr double capped(std::int64_t cap) const {
    if (infinite_ || count_ >= cap) return static_cast<double>(cap);
    return static_cast<double>(count_);
  }

 private:
  std::int64_t count_ = 0;
  bool infinite_ = false;
};

inline std::ostream& operator<<(std::ostream& os, Occupancy o) {
  if (o.is_infinite()) return os << "inf";
  return os << o.count();
}

}  // namespace zrp
