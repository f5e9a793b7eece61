#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "zrp/occupancy.hpp"
#include "zrp/window.hpp"

namespace zrp {

/// What lies beyond one end of the window.
///  closed: moves across the edge are suppressed.
///  sink:   a rate-0 reservoir that absorbs every particle crossing the edge.
///  source: a reservoir with infinitely many particles and site rate `rate`,
///          sitting on the virtual site next to the edge. It absorbs
///          arrivals and emits particles into the window.
struct Edge {
  enum class Kind { closed, sink, source };

  Kind kind = Kind::sink;
  double rate = 0.0;

  static Edge closed() { return {Kind::closed, 0.0}; }
  static Edge sink() { return {Kind::sink, 0.0}; }
  static Edge source(double rate);

  bool absorbs() const { return kind != Kind::closed; }
  std::string str() const;
  nlohmann::json to_json() const;
  static Edge from_json(const nlohmann::json& j);

  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Particles that crossed each window edge since construction.
struct MassRegister {
  std::int64_t escaped_left = 0;
  std::int64_t escaped_right = 0;
  std::int64_t injected_left = 0;
  std::int64_t injected_right = 0;

  friend bool operator==(const MassRegister&, const MassRegister&) = default;
};

/// Occupancies on a finite window plus the two edge policies. Sites holding
/// infinitely many particles form the in-window source set; they stay
/// infinite forever and finite sites stay finite.
class Configuration {
 public:
  Configuration() = default;
  Configuration(Window window, std::vector<Occupancy> occupancy, Edge left = Edge::sink(),
                Edge right = Edge::sink());

  static Configuration empty(Window window, Edge left = Edge::sink(), Edge right = Edge::sink());
  static Configuration from_counts(Window window, std::span<const std::int64_t> counts,
                                   Edge left = Edge::sink(), Edge right = Edge::sink());

  const Window& window() const { return window_; }
  const Edge& left_edge() const { return left_; }
  const Edge& right_edge() const { return right_; }

  Occupancy operator[](std::int64_t x) const { return occ_[window_.index(x)]; }
  Occupancy& at(std::int64_t x) { return occ_[window_.index(x)]; }
  std::span<const Occupancy> occupancies() const { return occ_; }

  const MassRegister& mass() const { return mass_; }
  MassRegister& mass() { return mass_; }

  /// Sites with infinite occupancy, increasing.
  std::vector<std::int64_t> source_set() const;
  /// Sum of occupancies on [from, last]; throws DomainError on an infinite site.
  std::int64_t mass_right_of(std::int64_t x) const;
  /// Total finite mass; throws DomainError if any site is infinite.
  std::int64_t total_mass() const;

  /// Sitewise zeta <= xi on the window (edge policies ignored).
  friend bool dominated(const Configuration& zeta, const Configuration& xi);

  std::string str() const;

 private:
  Window window_{};
  std::vector<Occupancy> occ_;
  Edge left_ = Edge::sink();
  Edge right_ = Edge::sink();
  MassRegister mass_{};
};

}  // namespace zrp
