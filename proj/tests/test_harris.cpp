#include <doctest.h>

#include <cmath>
#include <memory>

#include "zrp/errors.hpp"
#include "zrp/harris.hpp"
#include "zrp/measures.hpp"
#include "zrp/stats.hpp"

using namespace zrp;

namespace {

std::shared_ptr<const Environment> flat(Window w, double a = 1.0, double c = 0.5) {
  return std::make_shared<const Environment>(Environment::constant(c, w, a));
}

std::shared_ptr<const Environment> random_env(Window w, std::uint64_t seed) {
  return std::make_shared<const Environment>(
      build_iid_environment(0.5, RateLaw::uniform(0.5, 1.0), w, seed));
}

Configuration random_config(Window w, Rng& rng, int max, Edge l = Edge::sink(), Edge r = Edge::sink()) {
  std::vector<Occupancy> occ(w.size());
  for (auto& o : occ) o = Occupancy(static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(max) + 1)));
  return Configuration(w, std::move(occ), l, r);
}

}  // namespace

TEST_CASE("event stream basics") {
  CHECK(generate_events(1, {0, 9}, 0.0, 0.8).empty());
  const auto a = generate_events(5, {0, 9999}, 10.0, 0.8);
  const auto b = generate_events(5, {0, 9999}, 10.0, 0.8);
  CHECK(a == b);
  CHECK(std::abs(static_cast<double>(a.size()) - 1e5) < 4 * std::sqrt(1e5));
  std::size_t right = 0;
  for (const auto& e : a) right += e.z == 1;
  const double frac = double(right) / a.size();
  CHECK(std::abs(frac - 0.8) < 4 * std::sqrt(0.16 / a.size()));
  CHECK_THROWS_AS(generate_events(1, {0, 9}, 1.0, 0.5), ConfigError);
  CHECK_THROWS_AS(generate_events(1, {0, 9}, 1.0, 1.01), ConfigError);

  EventStream replay(a);
  CHECK(replay.pop() == a.front());
}

TEST_CASE("empty configuration stays empty") {
  const Window w{0, 20};
  Process p(flat(w), RateFunction::constant(), Configuration::empty(w));
  EventStream ev(1, harris_sites(w), 0.7);
  evolve(p, ev, 50.0);
  CHECK(p.config().total_mass() == 0);
}

TEST_CASE("exponential departure clock") {
  const Window w{0, 0};
  const auto env = flat(w);
  const int n = 100000;
  int gone = 0;
  for (int r = 0; r < n; ++r) {
    const std::vector<std::int64_t> one = {1};
    Process p(env, RateFunction::constant(), Configuration::from_counts(w, one, Edge::sink(), Edge::sink()));
    EventStream ev(derive_seed(11, r, StreamTag::harris), harris_sites(w), 1.0);
    evolve(p, ev, 1.0);
    gone += p.config()[0].count() == 0;
  }
  const double target = 1.0 - std::exp(-1.0);
  const double frac = double(gone) / n;
  CHECK(std::abs(frac - target) < 4 * std::sqrt(target * (1 - target) / n));
}

TEST_CASE("two-site closed chain") {
  const Window w{0, 1};
  const auto env = flat(w);
  const int n = 20000;
  RunningStats right;
  for (int r = 0; r < n; ++r) {
    const std::vector<std::int64_t> one = {1, 0};
    Process p(env, RateFunction::constant(),
              Configuration::from_counts(w, one, Edge::closed(), Edge::closed()));
    EventStream ev(derive_seed(12, r, StreamTag::harris), harris_sites(w), 0.8);
    evolve(p, ev, 30.0);
    CHECK(p.config().total_mass() == 1);
    right.add(static_cast<double>(p.config()[1].count()));
  }
  CHECK(std::abs(right.mean() - 0.8) < 4 * right.se());
}

TEST_CASE("conservation in a closed window") {
  const Window w{-15, 15};
  Rng rng(3);
  const auto env = random_env(w, 4);
  Process p(env, RateFunction::ramp(3), random_config(w, rng, 5, Edge::closed(), Edge::closed()));
  const auto m0 = p.config().total_mass();
  EventStream ev(9, harris_sites(w), 0.6);
  struct Conserve : Observer {
    std::int64_t m;
    bool ok = true;
    void after_jump(const Jump&, const Configuration& c) override { ok = ok && c.total_mass() == m; }
  } obs;
  obs.m = m0;
  Observer* list[] = {&obs};
  evolve(p, ev, 200.0, list);
  CHECK(obs.ok);
  CHECK(p.config().total_mass() == m0);
}

TEST_CASE("attractiveness under the basic coupling") {
  const Window w{-10, 10};
  const auto env = random_env(w, 21);
  int violations = 0;
  for (int r = 0; r < 200; ++r) {
    Rng rng(derive_seed(31, r, StreamTag::initial));
    auto lo = random_config(w, rng, 3);
    auto hi = lo;
    for (std::int64_t x = w.first; x <= w.last; ++x)
      for (auto k = rng.below(3); k > 0; --k) hi.at(x).add();
    std::vector<Process> ps = {Process(env, RateFunction::ramp(2), lo), Process(env, RateFunction::ramp(2), hi)};
    const auto sites = harris_sites(w);
    const double horizon = 1e4 / static_cast<double>(sites.size());
    EventStream ev(derive_seed(31, r, StreamTag::harris), sites, 0.7);
    CoupledOptions opt;
    opt.assert_order = true;
    try {
      evolve_coupled(ps, ev, horizon, opt);
    } catch (const InvariantError&) {
      ++violations;
    }
  }
  CHECK(violations == 0);
}

TEST_CASE("identical inputs give identical trajectories") {
  const Window w{-8, 8};
  const auto env = random_env(w, 2);
  Rng rng(1);
  const auto c = random_config(w, rng, 4);
  std::vector<Process> ps = {Process(env, RateFunction::constant(), c), Process(env, RateFunction::constant(), c)};
  EventStream ev(77, harris_sites(w), 0.9);
  CoupledOptions opt;
  opt.record = true;
  const auto tr = evolve_coupled(ps, ev, 100.0, opt);
  CHECK(tr[0].jumps == tr[1].jumps);
  CHECK(tr[0].final.str() == tr[1].final.str());
}

TEST_CASE("augmented source coupling keeps order off the source set") {
  const Window w{-10, 10};
  const auto env = random_env(w, 8);
  // S = {-10}, S' = {-10, 0}; alpha' >= alpha on S' and equal elsewhere
  auto values = std::vector<double>(env->values().begin(), env->values().end());
  values[w.index(0)] = 1.0;
  const auto env2 = std::make_shared<const Environment>(0.5, w, values);
  for (int r = 0; r < 50; ++r) {
    Rng rng(derive_seed(4, r, StreamTag::initial));
    auto a = random_config(w, rng, 2);
    a.at(-10) = Occupancy::infinite();
    auto b = a;
    b.at(0) = Occupancy::infinite();
    std::vector<Process> ps = {Process(env, RateFunction::constant(), a), Process(env2, RateFunction::constant(), b)};
    EventStream ev(derive_seed(4, r, StreamTag::harris), harris_sites(w), 0.8);
    CoupledOptions opt;
    opt.assert_order = true;
    CHECK_NOTHROW(evolve_coupled(ps, ev, 100.0, opt));
  }
}

TEST_CASE("infinite-site conventions") {
  const Window w{0, 2};
  std::vector<Occupancy> occ = {Occupancy::infinite(), Occupancy(0), Occupancy::infinite()};
  Process p(flat(w), RateFunction::constant(), Configuration(w, occ));
  CHECK(p.apply(Event{0.1, 0, 0.5, 1}).has_value());
  CHECK(p.config()[0].is_infinite());
  CHECK(p.config()[1].count() == 1);
  CHECK(p.apply(Event{0.2, 1, 0.5, 1}).has_value());
  CHECK(p.config()[1].count() == 0);
  CHECK(p.config()[2].is_infinite());
  CHECK(p.config().source_set() == std::vector<std::int64_t>{0, 2});
  CHECK_THROWS_AS(p.apply(Event{0.3, 7, 0.5, 1}), InvariantError);
}

TEST_CASE("edge policies") {
  const Window w{0, 0};
  const std::vector<std::int64_t> one = {1};
  Process closed(flat(w), RateFunction::constant(), Configuration::from_counts(w, one, Edge::closed(), Edge::closed()));
  CHECK_FALSE(closed.apply(Event{0.1, 0, 0.1, 1}).has_value());
  Process sink(flat(w), RateFunction::constant(), Configuration::from_counts(w, one));
  CHECK(sink.apply(Event{0.1, 0, 0.1, 1}).has_value());
  CHECK(sink.config().mass().escaped_right == 1);
  Process src(flat(w), RateFunction::constant(), Configuration::empty(w, Edge::source(0.3), Edge::sink()));
  CHECK_FALSE(src.apply(Event{0.1, -1, 0.31, 1}).has_value());
  CHECK(src.apply(Event{0.2, -1, 0.29, 1}).has_value());
  CHECK_FALSE(src.apply(Event{0.3, -1, 0.1, -1}).has_value());
  CHECK(src.config().mass().injected_left == 1);
  CHECK(src.config()[0].count() == 1);
}

TEST_CASE("fixed-site current equals the mass difference") {
  const Window w{-20, 20};
  const auto env = random_env(w, 3);
  for (int r = 0; r < 30; ++r) {
    Rng rng(derive_seed(5, r, StreamTag::initial));
    const auto c0 = random_config(w, rng, 4, Edge::source(0.4), Edge::sink());
    Process p(env, RateFunction::constant(), c0);
    EventStream ev(derive_seed(5, r, StreamTag::harris), harris_sites(w), 0.75);
    CurrentLedger live(Path::fixed(3));
    Observer* list[] = {&live};
    const auto tr = evolve(p, ev, 40.0, list, true);
    CHECK(live.total() == mass_difference_current(tr.initial, tr.final, 3));
    CHECK(measure_current(tr, Path::fixed(3)).total() == live.total());
    // moving paths obey the same identity with the tail measured at the end point
    const auto moving = measure_current(tr, Path::linear(-10, 0.5));
    CHECK(moving.site() == 10);
    CHECK(moving.total() == tr.final.mass_right_of(10) + tr.final.mass().escaped_right -
                                tr.initial.mass().escaped_right - tr.initial.mass_right_of(-10));
  }
  const auto env0 = flat(w);
  Process idle(env0, RateFunction::constant(), Configuration::empty(w));
  EventStream none(std::vector<Event>{});
  CurrentLedger l(Path::fixed(0));
  Observer* list[] = {&l};
  evolve(idle, none, 10.0, list);
  CHECK(l.total() == 0);
  CHECK_THROWS_AS(Path::steps(0, {{1.0, 2}}), ConfigError);
}

TEST_CASE("interface tracker") {
  const Window w{-15, 15};
  const auto env = random_env(w, 17);
  for (int r = 0; r < 100; ++r) {
    Rng rng(derive_seed(6, r, StreamTag::initial));
    auto zeta = random_config(w, rng, 3);
    auto varpi = random_config(w, rng, 3);
    const auto x0 = static_cast<std::int64_t>(rng.below(31)) - 15;
    for (std::int64_t x = w.first; x <= w.last; ++x) {
      const auto a = zeta[x], b = varpi[x];
      const bool swap = x <= x0 ? a > b : a < b;
      if (swap) {
        zeta.at(x) = b;
        varpi.at(x) = a;
      }
    }
    std::vector<Process> ps = {Process(env, RateFunction::ramp(2), zeta), Process(env, RateFunction::ramp(2), varpi)};
    InterfaceTracker tracker(x0);
    tracker.start(ps);
    CoupledOptions opt;
    opt.observers = {&tracker};
    EventStream ev(derive_seed(6, r, StreamTag::harris), harris_sites(w), 0.7);
    CHECK_NOTHROW(evolve_coupled(ps, ev, 1e3 / 33.0, opt));
    CHECK(tracker.max_sign_changes() <= 1);
    for (std::size_t k = 1; k < tracker.log().size(); ++k)
      CHECK(std::abs(tracker.log()[k].second - tracker.log()[k - 1].second) == 1);
  }

  // varpi = source configuration infinite on (-inf, y]
  const std::int64_t y = -3;
  std::vector<Occupancy> occ(w.size());
  for (auto x = w.first; x <= y; ++x) occ[w.index(x)] = Occupancy::infinite();
  Rng rng(8);
  auto zeta = random_config(w, rng, 2);
  for (auto x = w.first; x <= y; ++x) zeta.at(x) = Occupancy(0);
  std::vector<Process> ps = {Process(env, RateFunction::constant(), zeta),
                             Process(env, RateFunction::constant(), Configuration(w, occ))};
  InterfaceTracker tracker(y);
  tracker.start(ps);
  CoupledOptions opt;
  opt.observers = {&tracker};
  EventStream ev(99, harris_sites(w), 0.8);
  evolve_coupled(ps, ev, 200.0, opt);
  for (const auto& [t, x] : tracker.log()) CHECK(x >= y);
}

TEST_CASE("block averaged rate") {
  const Window w{0, 9};
  const auto env = random_env(w, 1);
  Process empty(env, RateFunction::constant(), Configuration::empty(w));
  BlockRateMeter m0(empty, 0, 10);
  EventStream ev(3, harris_sites(w), 0.8);
  Observer* l0[] = {&m0};
  evolve(empty, ev, 10.0, l0);
  CHECK(m0.value() == 0.0);

  std::vector<Occupancy> occ(w.size());
  occ[4] = Occupancy::infinite();
  Process src(env, RateFunction::constant(), Configuration(w, occ));
  BlockRateMeter m1(src, 4, 1);
  EventStream ev2(4, harris_sites(w), 0.8);
  Observer* l1[] = {&m1};
  evolve(src, ev2, 10.0, l1);
  CHECK(m1.value() == doctest::Approx((*env)(4)).epsilon(1e-14));
}

TEST_CASE("source configurations") {
  const Window w{-10, 10};
  const auto env = flat(w, 1.0, 0.5);
  const auto g = RateFunction::constant();
  const auto pure = make_source_configuration(*env, g, 2, std::nullopt);
  for (auto x = w.first; x <= w.last; ++x) CHECK(pure[x].is_infinite() == (x <= 2));

  Rng rng(2);
  const auto u = uniform_field(rng, w.size());
  const auto filled = make_source_configuration(*env, g, 2, 0.4, u);
  const auto eq = sample_product_measure(*env, g, 0.4, u);
  for (auto x = w.first; x <= w.last; ++x) CHECK(filled[x] == (x <= 2 ? eq[x] : Occupancy(0)));
  CHECK(filled.left_edge() == Edge::source(0.4));
  CHECK_THROWS_AS(make_source_configuration(*env, g, 2, 0.6, u), DomainError);
}

TEST_CASE("finite propagation surrogate") {
  const double t = 2.0;
  const std::int64_t m = 20;
  const double speed = 3.0;
  const Window w{-40, 40};
  const auto env = random_env(w, 12);
  const auto inner = static_cast<std::int64_t>(m - speed * t);
  int agree = 0;
  for (int r = 0; r < 1000; ++r) {
    Rng rng(derive_seed(13, r, StreamTag::initial));
    auto a = random_config(w, rng, 3);
    auto b = a;
    for (auto x = w.first; x <= w.last; ++x)
      if (std::abs(x) > m) b.at(x) = Occupancy(static_cast<std::int64_t>(rng.below(6)));
    std::vector<Process> ps = {Process(env, RateFunction::constant(), a), Process(env, RateFunction::constant(), b)};
    EventStream ev(derive_seed(13, r, StreamTag::harris), harris_sites(w), 0.8);
    evolve_coupled(ps, ev, t);
    bool same = true;
    for (auto x = -inner; x <= inner; ++x) same = same && ps[0].config()[x] == ps[1].config()[x];
    agree += same;
  }
  CHECK(agree >= 990);
}
