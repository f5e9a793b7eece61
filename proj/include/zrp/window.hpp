#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace zrp {

/// Closed integer interval [first, last] of lattice sites.
struct Window {
  std::int64_t first = 0;
  std::int64_t last = -1;

  constexpr std::size_t size() const {
    return last < first ? 0 : static_cast<std::size_t>(last - first + 1);
  }
  constexpr bool contains(std::int64_t x) const { return x >= first && x <= last; }
  constexpr bool contains(const Window& w) const {
    return w.size() == 0 || (contains(w.first) && contains(w.last));
  }
  constexpr std::size_t index(std::int64_t x) const { return static_cast<std::size_t>(x - first); }
  constexpr std::int64_t site(std::size_t i) const { return first + static_cast<std::int64_t>(i); }

  friend constexpr bool operator==(const Window&, const Window&) = default;

  std::string str() const {
    return "[" + std::to_string(first) + "," + std::to_string(last) + "]";
  }
};

}  // namespace zrp
