#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "zrp/configuration.hpp"
#include "zrp/environment.hpp"
#include "zrp/rates.hpp"
#include "zrp/rng.hpp"

namespace zrp {

/// Potential jump: at time t the clock of `site` rings with mark u and
/// direction z. It fires iff u <= alpha(site) g(eta(site)).
struct Event {
  double t;
  std::int64_t site;
  double u;
  int z;

  friend bool operator==(const Event&, const Event&) = default;
};

/// Throws ConfigError unless p lies in (1/2, 1].
void validate_drift(double p);

/// Sites a process on `w` needs clocks for: the window and the virtual
/// reservoir site on each side.
inline Window harris_sites(const Window& w) { return {w.first - 1, w.last + 1}; }

/// Poisson clocks of rate 1 on every site of `sites`, realized as one
/// superposed stream of rate |sites| whose events pick a site uniformly.
/// The stream is generated lazily; it is a pure function of (seed, sites, p).
/// A recorded event list can be replayed through the same interface.
class EventStream {
 public:
  EventStream(std::uint64_t seed, Window sites, double p);
  explicit EventStream(std::vector<Event> recorded);

  const Event& peek() const { return next_; }
  Event pop();
  const Window& sites() const { return sites_; }
  double p() const { return p_; }

 private:
  void draw();

  Window sites_{};
  double p_ = 1.0;
  double t_ = 0.0;
  Rng rng_{0};
  bool replay_ = false;
  std::vector<Event> recorded_;
  std::size_t cursor_ = 0;
  Event next_{};
};

/// All events of the stream with t <= horizon.
std::vector<Event> generate_events(std::uint64_t seed, Window sites, double horizon, double p);

/// A particle moved from `from` to `to` at time t. Either end may be a
/// virtual reservoir site just outside the window.
struct Jump {
  double t;
  std::int64_t from;
  std::int64_t to;

  friend bool operator==(const Jump&, const Jump&) = default;
};

/// Zero-range dynamics on one configuration. Holds the environment by shared
/// pointer so coupled processes can share or differ in it.
class Process {
 public:
  Process(std::shared_ptr<const Environment> env, RateFunction g, Configuration config);

  const Configuration& config() const { return config_; }
  Configuration& config() { return config_; }
  const Environment& env() const { return *env_; }
  std::shared_ptr<const Environment> env_ptr() const { return env_; }
  const RateFunction& g() const { return g_; }

  /// Jump rate of a site; on virtual sites, the reservoir rate (0 for sinks).
  double rate(std::int64_t x) const;
  /// The jump this event triggers, without applying it. Suppressed moves
  /// across closed edges return nothing.
  std::optional<Jump> resolve(const Event& e) const;
  void commit(const Jump& j);
  /// resolve + commit.
  std::optional<Jump> apply(const Event& e);

 private:
  std::shared_ptr<const Environment> env_;
  RateFunction g_;
  Configuration config_;
};

/// Hooks called during evolution. before_jump runs while the configuration
/// still has its pre-jump state.
class Observer {
 public:
  virtual ~Observer() = default;
  virtual void before_jump(double /*t*/, const Configuration& /*c*/) {}
  virtual void after_jump(const Jump& /*j*/, const Configuration& /*c*/) {}
  virtual void finish(double /*t*/, const Configuration& /*c*/) {}
};

/// Result of an evolution: endpoints plus the jump log when recorded.
struct Trajectory {
  Configuration initial;
  Configuration final;
  double start = 0.0;
  double end = 0.0;
  bool recorded = false;
  std::vector<Jump> jumps;

  /// Re-runs the recorded jumps from `initial` through the observers.
  void replay(std::span<Observer* const> observers) const;
};

/// Applies all events with t <= until. `start` is the time the configuration
/// refers to (used by observers that integrate over time).
Trajectory evolve(Process& process, EventStream& events, double until,
                  std::span<Observer* const> observers = {}, bool record = false,
                  double start = 0.0);

/// Observer of a set of processes driven by one event stream.
class CoupledObserver {
 public:
  virtual ~CoupledObserver() = default;
  virtual void on_event(const Event& e, std::span<const std::optional<Jump>> jumps,
                        std::span<const Process> processes) = 0;
  virtual void finish(double /*t*/, std::span<const Process> /*processes*/) {}
};

struct CoupledOptions {
  /// Processes are given in sitewise increasing order; check it after every
  /// event and throw InvariantError when it breaks.
  bool assert_order = false;
  bool record = false;
  std::vector<CoupledObserver*> observers;
  /// Optional single-process observers, one list per process.
  std::vector<std::vector<Observer*>> per_process;
};

/// Basic coupling: every process sees the same events.
std::vector<Trajectory> evolve_coupled(std::vector<Process>& processes, EventStream& events,
                                       double until, const CoupledOptions& options = {},
                                       double start = 0.0);

/// Site-valued path y(s) used for currents.
class Path {
 public:
  static Path fixed(std::int64_t x0);
  /// y(s) = x0 + floor(v s) (toward -inf for v < 0: x0 - floor(|v| s)).
  static Path linear(std::int64_t x0, double v);
  /// Piecewise-constant path given by (time, new site) moves of size 1.
  static Path steps(std::int64_t x0, std::vector<std::pair<double, std::int64_t>> moves);

  std::int64_t start() const { return x0_; }
  std::int64_t at(double s) const;

 private:
  friend class CurrentLedger;
  enum class Kind { fixed, linear, steps };
  Kind kind_ = Kind::fixed;
  std::int64_t x0_ = 0;
  double v_ = 0.0;
  std::vector<std::pair<double, std::int64_t>> moves_;
};

/// Rightward current across a path: jumps y -> y+1 count +1, jumps y+1 -> y
/// count -1, and a path step picks up minus the occupancy it passes over.
class CurrentLedger : public Observer {
 public:
  explicit CurrentLedger(Path path, double start = 0.0);

  void before_jump(double t, const Configuration& c) override;
  void after_jump(const Jump& j, const Configuration& c) override;
  void finish(double t, const Configuration& c) override;

  std::int64_t total() const { return right_ - left_ + motion_; }
  std::int64_t right_jumps() const { return right_; }
  std::int64_t left_jumps() const { return left_; }
  std::int64_t motion() const { return motion_; }
  std::int64_t site() const { return y_; }

  nlohmann::json to_json() const;

 private:
  void advance(double t, const Configuration& c);

  Path path_;
  std::int64_t y_;
  std::size_t next_move_ = 0;  // linear: moves taken so far; steps: index
  std::int64_t right_ = 0;
  std::int64_t left_ = 0;
  std::int64_t motion_ = 0;
};

/// Replays a recorded trajectory through a ledger.
CurrentLedger measure_current(const Trajectory& trajectory, const Path& path);

/// Fixed-site current from masses: (R_t + escaped_right - injected_right) - R_0,
/// with R the mass right of x0. Requires finite mass right of x0.
std::int64_t mass_difference_current(const Configuration& initial, const Configuration& final,
                                     std::int64_t x0);

/// Interface between two coupled processes zeta and varpi: zeta <= varpi at
/// sites <= x and zeta >= varpi at sites > x. Moves by at most one site per
/// event and checks the two-sided ordering after every event.
class InterfaceTracker : public CoupledObserver {
 public:
  InterfaceTracker(std::int64_t x0, std::size_t zeta = 0, std::size_t varpi = 1);

  /// Checks the initial pair; throws InvariantError if x0 does not separate it.
  void start(std::span<const Process> processes);
  void on_event(const Event& e, std::span<const std::optional<Jump>> jumps,
                std::span<const Process> processes) override;

  std::int64_t position() const { return x_; }
  const std::vector<std::pair<double, std::int64_t>>& log() const { return log_; }
  std::size_t events_checked() const { return checked_; }
  int max_sign_changes() const { return max_sign_changes_; }

 private:
  void check(const Configuration& zeta, const Configuration& varpi, double t);

  std::int64_t x_;
  std::size_t zi_;
  std::size_t wi_;
  std::vector<std::pair<double, std::int64_t>> log_;
  std::size_t checked_ = 0;
  int max_sign_changes_ = 0;
};

/// Sign changes of zeta - varpi along the window, zeros skipped.
int sign_changes(const Configuration& zeta, const Configuration& varpi);

/// F_{x0}(x, zeta): partial sums to the right of x0, minus partial sums to the left.
std::int64_t cumulative_mass(const Configuration& zeta, std::int64_t x0, std::int64_t x);

/// Time average of L^{-1} sum_{i<L} alpha(x+i) g(eta_s(x+i)) over [start, t].
class BlockRateMeter : public Observer {
 public:
  BlockRateMeter(const Process& process, std::int64_t x, std::int64_t length, double start = 0.0);

  void before_jump(double t, const Configuration& c) override;
  void after_jump(const Jump& j, const Configuration& c) override;
  void finish(double t, const Configuration& c) override;

  double value() const;

 private:
  void integrate(double t);
  double contribution(std::int64_t y, const Configuration& c) const;

  std::shared_ptr<const Environment> env_;
  RateFunction g_;
  std::int64_t x_;
  std::int64_t length_;
  std::vector<double> contrib_;
  double sum_ = 0.0;
  double integral_ = 0.0;
  double start_;
  double last_;
};

/// Source process: infinitely many particles on [first, x_t] and nothing to
/// the right (fill = nullopt), or the inversion-coupled equilibrium sample at
/// Lambda on [first, x_t] and nothing to the right. The Lambda variant keeps
/// its left edge fed by a reservoir of rate Lambda. Right edge: sink.
/// `uniforms` holds one level per window site (only sites <= x_t are used).
Configuration make_source_configuration(const Environment& env, const RateFunction& g,
                                        std::int64_t x_t, std::optional<double> fill,
                                        std::span<const double> uniforms = {});

}  // namespace zrp
