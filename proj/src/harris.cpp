#include "zrp/harris.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "zrp/errors.hpp"
#include "zrp/measures.hpp"

namespace zrp {

void validate_drift(double p) {
  if (!(p > 0.5 && p <= 1.0))
    throw ConfigError("jump probability p must lie in (1/2, 1] (nearest-neighbour kernel with drift)");
}

// ---------------------------------------------------------------------------
// Event stream

EventStream::EventStream(std::uint64_t seed, Window sites, double p)
    : sites_(sites), p_(p), rng_(seed) {
  validate_drift(p);
  if (sites.size() == 0) throw ConfigError("event stream needs at least one site");
  draw();
}

EventStream::EventStream(std::vector<Event> recorded) : replay_(true), recorded_(std::move(recorded)) {
  if (!std::is_sorted(recorded_.begin(), recorded_.end(),
                      [](const Event& a, const Event& b) { return a.t < b.t; }))
    throw ConfigError("recorded events must be time-ordered");
  draw();
}

void EventStream::draw() {
  if (replay_) {
    if (cursor_ < recorded_.size()) {
      next_ = recorded_[cursor_++];
    } else {
      next_ = Event{std::numeric_limits<double>::infinity(), 0, 1.0, 1};
    }
    return;
  }
  const auto n = sites_.size();
  t_ += rng_.exponential(static_cast<double>(n));
  const auto site = sites_.first + static_cast<std::int64_t>(rng_.below(n));
  const double u = rng_.uniform();
  const int z = (p_ == 1.0 || rng_.uniform() < p_) ? 1 : -1;
  next_ = Event{t_, site, u, z};
}

Event EventStream::pop() {
  Event e = next_;
  draw();
  return e;
}

std::vector<Event> generate_events(std::uint64_t seed, Window sites, double horizon, double p) {
  validate_drift(p);
  if (horizon < 0.0) throw ConfigError("horizon must be nonnegative");
  std::vector<Event> out;
  if (horizon == 0.0 || sites.size() == 0) return out;
  EventStream stream(seed, sites, p);
  while (stream.peek().t <= horizon) out.push_back(stream.pop());
  return out;
}

// ---------------------------------------------------------------------------
// Process

Process::Process(std::shared_ptr<const Environment> env, RateFunction g, Configuration config)
    : env_(std::move(env)), g_(std::move(g)), config_(std::move(config)) {
  if (!env_) throw ConfigError("process needs an environment");
  if (!env_->window().contains(config_.window()))
    throw ConfigError("configuration window " + config_.window().str() +
                      " not covered by environment " + env_->window().str());
}

double Process::rate(std::int64_t x) const {
  const auto& w = config_.window();
  if (w.contains(x)) return (*env_)(x) * g_(config_[x]);
  if (x == w.first - 1) return config_.left_edge().kind == Edge::Kind::source ? config_.left_edge().rate : 0.0;
  if (x == w.last + 1) return config_.right_edge().kind == Edge::Kind::source ? config_.right_edge().rate : 0.0;
  throw InvariantError("event at site " + std::to_string(x) + " outside window " + w.str());
}

std::optional<Jump> Process::resolve(const Event& e) const {
  const auto& w = config_.window();
  const auto x = e.site;
  const auto to = x + e.z;
  if (w.contains(x)) {
    const double r = (*env_)(x) * g_(config_[x]);
    if (!(e.u <= r)) return std::nullopt;
    if (!w.contains(to)) {
      const Edge& edge = to < w.first ? config_.left_edge() : config_.right_edge();
      if (!edge.absorbs()) return std::nullopt;
    }
    return Jump{e.t, x, to};
  }
  // Virtual reservoir: only emissions into the window matter.
  if (!w.contains(to)) {
    if (x < w.first - 1 || x > w.last + 1)
      throw InvariantError("event at site " + std::to_string(x) + " outside window " + w.str());
    return std::nullopt;
  }
  const Edge& edge = x < w.first ? config_.left_edge() : config_.right_edge();
  if (edge.kind != Edge::Kind::source || !(e.u <= edge.rate)) return std::nullopt;
  return Jump{e.t, x, to};
}

void Process::commit(const Jump& j) {
  const auto& w = config_.window();
  if (w.contains(j.from)) {
    config_.at(j.from).remove();
  } else if (j.from < w.first) {
    ++config_.mass().injected_left;
  } else {
    ++config_.mass().injected_right;
  }
  if (w.contains(j.to)) {
    config_.at(j.to).add();
  } else if (j.to < w.first) {
    ++config_.mass().escaped_left;
  } else {
    ++config_.mass().escaped_right;
  }
}

std::optional<Jump> Process::apply(const Event& e) {
  auto j = resolve(e);
  if (j) commit(*j);
  return j;
}

// ---------------------------------------------------------------------------
// Evolution

void Trajectory::replay(std::span<Observer* const> observers) const {
  if (!recorded) throw ConfigError("trajectory was not recorded");
  Configuration c = initial;
  auto env = std::make_shared<const Environment>(
      Environment::constant(0.5, c.window(), 1.0));  // rates unused during replay
  Process p(env, RateFunction::constant(), c);
  for (const auto& j : jumps) {
    for (auto* o : observers) o->before_jump(j.t, p.config());
    p.commit(j);
    for (auto* o : observers) o->after_jump(j, p.config());
  }
  for (auto* o : observers) o->finish(end, p.config());
}

Trajectory evolve(Process& process, EventStream& events, double until,
                  std::span<Observer* const> observers, bool record, double start) {
  Trajectory tr;
  tr.initial = process.config();
  tr.start = start;
  tr.end = until;
  tr.recorded = record;
  while (events.peek().t <= until) {
    const Event e = events.pop();
    const auto j = process.resolve(e);
    if (!j) continue;
    for (auto* o : observers) o->before_jump(e.t, process.config());
    process.commit(*j);
    for (auto* o : observers) o->after_jump(*j, process.config());
    if (record) tr.jumps.push_back(*j);
  }
  for (auto* o : observers) o->finish(until, process.config());
  tr.final = process.config();
  return tr;
}

namespace {

void check_pair_at(const Configuration& lo, const Configuration& hi, std::int64_t x, double t) {
  if (!lo.window().contains(x)) return;
  if (lo[x] > hi[x]) {
    std::ostringstream msg;
    msg << "coupled order broken at site " << x << ", time " << t << ": " << lo[x] << " > " << hi[x];
    throw InvariantError(msg.str());
  }
}

}  // namespace

std::vector<Trajectory> evolve_coupled(std::vector<Process>& processes, EventStream& events,
                                       double until, const CoupledOptions& options, double start) {
  if (processes.empty()) return {};
  const auto w = processes.front().config().window();
  for (const auto& p : processes)
    if (p.config().window() != w) throw ConfigError("coupled processes need identical windows");
  if (!options.per_process.empty() && options.per_process.size() != processes.size())
    throw ConfigError("one observer list per process required");
  if (options.assert_order)
    for (std::size_t k = 1; k < processes.size(); ++k)
      if (!dominated(processes[k - 1].config(), processes[k].config()))
        throw InvariantError("coupled inputs are not ordered");

  std::vector<Trajectory> out(processes.size());
  for (std::size_t k = 0; k < processes.size(); ++k) {
    out[k].initial = processes[k].config();
    out[k].start = start;
    out[k].end = until;
    out[k].recorded = options.record;
  }
  std::vector<std::optional<Jump>> jumps(processes.size());
  auto observers_of = [&](std::size_t k) -> std::span<Observer* const> {
    if (options.per_process.empty()) return {};
    return options.per_process[k];
  };

  while (events.peek().t <= until) {
    const Event e = events.pop();
    bool any = false;
    for (std::size_t k = 0; k < processes.size(); ++k) {
      jumps[k] = processes[k].resolve(e);
      any = any || jumps[k].has_value();
    }
    if (!any) {
      if (!options.observers.empty())
        for (auto* o : options.observers) o->on_event(e, jumps, processes);
      continue;
    }
    for (std::size_t k = 0; k < processes.size(); ++k) {
      if (!jumps[k]) continue;
      for (auto* o : observers_of(k)) o->before_jump(e.t, processes[k].config());
      processes[k].commit(*jumps[k]);
      for (auto* o : observers_of(k)) o->after_jump(*jumps[k], processes[k].config());
      if (options.record) out[k].jumps.push_back(*jumps[k]);
    }
    if (options.assert_order) {
      for (std::size_t k = 1; k < processes.size(); ++k) {
        for (std::int64_t y : {e.site - 1, e.site, e.site + 1})
          check_pair_at(processes[k - 1].config(), processes[k].config(), y, e.t);
      }
    }
    for (auto* o : options.observers) o->on_event(e, jumps, processes);
  }
  for (std::size_t k = 0; k < processes.size(); ++k) {
    for (auto* o : observers_of(k)) o->finish(until, processes[k].config());
    out[k].final = processes[k].config();
  }
  for (auto* o : options.observers) o->finish(until, processes);
  return out;
}

// ---------------------------------------------------------------------------
// Paths and currents

Path Path::fixed(std::int64_t x0) {
  Path p;
  p.x0_ = x0;
  return p;
}

Path Path::linear(std::int64_t x0, double v) {
  Path p;
  p.kind_ = v == 0.0 ? Kind::fixed : Kind::linear;
  p.x0_ = x0;
  p.v_ = v;
  return p;
}

Path Path::steps(std::int64_t x0, std::vector<std::pair<double, std::int64_t>> moves) {
  Path p;
  p.kind_ = Kind::steps;
  p.x0_ = x0;
  std::int64_t prev = x0;
  double prev_t = -std::numeric_limits<double>::infinity();
  for (const auto& [t, y] : moves) {
    if (std::abs(y - prev) != 1) throw ConfigError("path jump size must be exactly 1");
    if (t < prev_t) throw ConfigError("path moves must be time-ordered");
    prev = y;
    prev_t = t;
  }
  p.moves_ = std::move(moves);
  return p;
}

std::int64_t Path::at(double s) const {
  switch (kind_) {
    case Kind::fixed: return x0_;
    case Kind::linear: {
      const auto k = static_cast<std::int64_t>(std::floor(std::abs(v_) * s));
      return v_ > 0 ? x0_ + k : x0_ - k;
    }
    case Kind::steps: {
      std::int64_t y = x0_;
      for (const auto& [t, z] : moves_) {
        if (t > s) break;
        y = z;
      }
      return y;
    }
  }
  return x0_;
}

CurrentLedger::CurrentLedger(Path path, double start) : path_(std::move(path)), y_(path_.start()) {
  // A linear path may already have moved at the start time.
  if (path_.kind_ == Path::Kind::linear && start > 0.0)
    throw ConfigError("linear paths start at time 0");
}

void CurrentLedger::advance(double t, const Configuration& c) {
  auto step = [&](std::int64_t to) {
    const auto& w = c.window();
    const auto picked = to > y_ ? to : y_;
    if (!w.contains(picked)) throw ConfigError("path left the window at site " + std::to_string(picked));
    const auto o = c[picked];
    if (o.is_infinite()) throw DomainError("path crossed an infinite site");
    motion_ += to > y_ ? -o.count() : o.count();
    y_ = to;
  };
  switch (path_.kind_) {
    case Path::Kind::fixed: return;
    case Path::Kind::linear: {
      const double speed = std::abs(path_.v_);
      while (static_cast<double>(next_move_ + 1) / speed <= t) {
        ++next_move_;
        step(path_.v_ > 0 ? y_ + 1 : y_ - 1);
      }
      return;
    }
    case Path::Kind::steps: {
      while (next_move_ < path_.moves_.size() && path_.moves_[next_move_].first <= t) {
        step(path_.moves_[next_move_].second);
        ++next_move_;
      }
      return;
    }
  }
}

void CurrentLedger::before_jump(double t, const Configuration& c) { advance(t, c); }

void CurrentLedger::after_jump(const Jump& j, const Configuration&) {
  if (j.from == y_ && j.to == y_ + 1) ++right_;
  if (j.from == y_ + 1 && j.to == y_) ++left_;
}

void CurrentLedger::finish(double t, const Configuration& c) { advance(t, c); }

nlohmann::json CurrentLedger::to_json() const {
  return {{"current", total()}, {"right_jumps", right_}, {"left_jumps", left_},
          {"path_motion", motion_}, {"site", y_}};
}

CurrentLedger measure_current(const Trajectory& trajectory, const Path& path) {
  CurrentLedger ledger(path, trajectory.start);
  Observer* obs[] = {&ledger};
  trajectory.replay(obs);
  return ledger;
}

std::int64_t mass_difference_current(const Configuration& initial, const Configuration& final,
                                     std::int64_t x0) {
  const auto esc = final.mass().escaped_right - initial.mass().escaped_right;
  const auto inj = final.mass().injected_right - initial.mass().injected_right;
  return final.mass_right_of(x0) + esc - inj - initial.mass_right_of(x0);
}

// ---------------------------------------------------------------------------
// Interface

InterfaceTracker::InterfaceTracker(std::int64_t x0, std::size_t zeta, std::size_t varpi)
    : x_(x0), zi_(zeta), wi_(varpi) {}

int sign_changes(const Configuration& zeta, const Configuration& varpi) {
  int changes = 0;
  int last = 0;
  for (std::size_t i = 0; i < zeta.window().size(); ++i) {
    const auto x = zeta.window().site(i);
    const auto c = zeta[x] <=> varpi[x];
    const int s = c < 0 ? -1 : (c > 0 ? 1 : 0);
    if (s == 0) continue;
    if (last != 0 && s != last) ++changes;
    last = s;
  }
  return changes;
}

void InterfaceTracker::check(const Configuration& zeta, const Configuration& varpi, double t) {
  const auto& w = zeta.window();
  for (std::size_t i = 0; i < w.size(); ++i) {
    const auto y = w.site(i);
    const bool ok = y <= x_ ? zeta[y] <= varpi[y] : zeta[y] >= varpi[y];
    if (!ok) {
      std::ostringstream msg;
      msg << "interface ordering broken at site " << y << " (interface " << x_ << ", time " << t << ")";
      throw InvariantError(msg.str());
    }
  }
  max_sign_changes_ = std::max(max_sign_changes_, sign_changes(zeta, varpi));
  ++checked_;
}

void InterfaceTracker::start(std::span<const Process> processes) {
  log_.assign(1, {0.0, x_});
  check(processes[zi_].config(), processes[wi_].config(), 0.0);
}

void InterfaceTracker::on_event(const Event& e, std::span<const std::optional<Jump>> jumps,
                                std::span<const Process> processes) {
  const auto& zeta = processes[zi_].config();
  const auto& varpi = processes[wi_].config();
  const auto& w = zeta.window();
  const bool zj = jumps[zi_].has_value();
  const bool wj = jumps[wi_].has_value();
  const auto before = x_;
  // Virtual sites carry no comparison, so the tests below treat them as
  // already ordered.
  if (zj != wj) {
    if (e.site == x_ && wj) {
      const auto y = x_ + 1;
      if (w.contains(y) && varpi[y] > zeta[y]) x_ = y;
    } else if (e.site == x_ + 1 && zj) {
      if (w.contains(x_) && !(varpi[x_] >= zeta[x_])) x_ = x_ - 1;
    }
  }
  if (x_ != before) log_.emplace_back(e.t, x_);
  check(zeta, varpi, e.t);
}

std::int64_t cumulative_mass(const Configuration& zeta, std::int64_t x0, std::int64_t x) {
  const auto& w = zeta.window();
  std::int64_t s = 0;
  auto count = [&](std::int64_t y) -> std::int64_t {
    if (!w.contains(y)) return 0;
    const auto o = zeta[y];
    if (o.is_infinite()) throw DomainError("cumulative mass over an infinite site");
    return o.count();
  };
  if (x > x0) {
    for (std::int64_t y = x0 + 1; y <= x; ++y) s += count(y);
    return s;
  }
  for (std::int64_t y = x; y <= x0; ++y) s += count(y);
  return -s;
}

// ---------------------------------------------------------------------------
// Block rate

BlockRateMeter::BlockRateMeter(const Process& process, std::int64_t x, std::int64_t length, double start)
    : env_(process.env_ptr()), g_(process.g()), x_(x), length_(length), start_(start), last_(start) {
  if (length <= 0) throw ConfigError("block length must be positive");
  const auto& w = process.config().window();
  if (!w.contains(x) || !w.contains(x + length - 1)) throw ConfigError("block outside window");
  contrib_.resize(static_cast<std::size_t>(length));
  for (std::int64_t i = 0; i < length; ++i) {
    contrib_[static_cast<std::size_t>(i)] = contribution(x + i, process.config());
    sum_ += contrib_[static_cast<std::size_t>(i)];
  }
}

double BlockRateMeter::contribution(std::int64_t y, const Configuration& c) const {
  return (*env_)(y) * g_(c[y]);
}

void BlockRateMeter::integrate(double t) {
  integral_ += sum_ * (t - last_);
  last_ = t;
}

void BlockRateMeter::before_jump(double t, const Configuration&) { integrate(t); }

void BlockRateMeter::after_jump(const Jump& j, const Configuration& c) {
  for (auto y : {j.from, j.to}) {
    if (y < x_ || y >= x_ + length_) continue;
    auto& slot = contrib_[static_cast<std::size_t>(y - x_)];
    const double now = contribution(y, c);
    sum_ += now - slot;
    slot = now;
  }
}

void BlockRateMeter::finish(double t, const Configuration&) { integrate(t); }

double BlockRateMeter::value() const {
  const double span = last_ - start_;
  if (!(span > 0.0)) return 0.0;
  return integral_ / (span * static_cast<double>(length_));
}

// ---------------------------------------------------------------------------
// Source processes

Configuration make_source_configuration(const Environment& env, const RateFunction& g,
                                        std::int64_t x_t, std::optional<double> fill,
                                        std::span<const double> uniforms) {
  const auto& w = env.window();
  if (!w.contains(x_t)) throw ConfigError("source site outside window");
  std::vector<Occupancy> occ(w.size());
  if (!fill) {
    for (auto x = w.first; x <= x_t; ++x) occ[w.index(x)] = Occupancy::infinite();
    return Configuration(w, std::move(occ), Edge::sink(), Edge::sink());
  }
  const double lambda = *fill;
  if (!(lambda >= 0.0)) throw DomainError("fill level must be nonnegative");
  if (lambda > env.floor()) throw DomainError("fill level above the critical fugacity c");
  if (uniforms.size() != w.size()) throw ConfigError("one uniform per window site required");
  const auto eq = ProductMeasure::equilibrium(env.restricted({w.first, x_t}), g, lambda);
  for (auto x = w.first; x <= x_t; ++x) occ[w.index(x)] = Occupancy(eq.law(x).quantile(uniforms[w.index(x)]));
  return Configuration(w, std::move(occ), Edge::source(lambda), Edge::sink());
}

}  // namespace zrp
