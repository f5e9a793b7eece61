// Command-line front end: env | analytic | jackson | sim | exp.
// Exit status: 0 when every verdict passes, 1 when one fails, 2 on errors.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>

#include "zrp/analytic.hpp"
#include "zrp/configuration.hpp"
#include "zrp/errors.hpp"
#include "zrp/experiments.hpp"
#include "zrp/harris.hpp"
#include "zrp/jackson.hpp"
#include "zrp/measures.hpp"

using namespace zrp;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json load_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw ConfigError("cannot read " + p.string());
  return json::parse(in);
}

void save_json(const fs::path& p, const json& j) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p);
  if (!out) throw ConfigError("cannot write " + p.string());
  out << j.dump(2) << '\n';
}

Window window_of(const json& j) {
  const auto& w = j.at("window");
  return {w.at(0).get<std::int64_t>(), w.at(1).get<std::int64_t>()};
}

struct Common {
  std::uint64_t seed = 1;
  int replicas = 0;
  std::string out = "out";
};

int env_gen(const std::string& config, const Common& c) {
  const auto j = load_json(config);
  const auto spec = EnvSpec::from_json(j.at("env"));
  const auto env = spec.build(window_of(j));
  fs::create_directories(c.out);
  env.write_csv(fs::path(c.out) / "env.csv");
  env.write_sidecar(fs::path(c.out) / "env.json");
  std::cout << "wrote " << env.window().size() << " sites to " << c.out << "\n";
  return 0;
}

int env_check(const std::string& csv, const std::string& sidecar, std::vector<double> eps,
              std::vector<std::int64_t> ns, const Common& c) {
  const auto env = Environment::read(csv, sidecar);
  const auto report = check_slow_site_density(env, eps, ns);
  json j = {{"rows", json::array()}, {"trends", json::array()}, {"slack", report.slack}};
  for (const auto& r : report.rows) j["rows"].push_back({{"epsilon", r.epsilon}, {"n", r.n}, {"min_alpha", r.min_alpha}});
  for (const auto& [e, ok] : report.trends) j["trends"].push_back({{"epsilon", e}, {"pass", ok}});
  save_json(fs::path(c.out) / "env_check.json", j);
  std::cout << j.dump(2) << "\n";
  return report.all_trending() ? 0 : 1;
}

int analytic_build(const std::string& config, const Common& c) {
  const auto j = load_json(config);
  const auto g = j.contains("g") ? RateFunction::from_json(j.at("g")) : RateFunction::constant();
  const auto law = RateLaw::from_json(j.at("law"));
  FluxSpec spec;
  spec.p = j.value("p", spec.p);
  spec.uniform_nodes = j.value("uniform_nodes", spec.uniform_nodes);
  spec.geometric_from = j.value("geometric_from", spec.geometric_from);
  spec.geometric_to = j.value("geometric_to", spec.geometric_to);
  spec.v_nodes = j.value("v_nodes", spec.v_nodes);
  spec.delta_h = j.value("delta_h", spec.delta_h);
  const FluxTable table(AnnealedDensity(g, law, j.at("c").get<double>()), spec);
  fs::create_directories(c.out);
  table.write_csv(fs::path(c.out) / "flux.csv");
  table.write_json(fs::path(c.out) / "flux.json");
  std::cout << table.header().dump(2) << "\n";
  return 0;
}

int jackson_solve(const std::string& config, bool augment, const Common& c) {
  const auto j = load_json(config);
  const auto env = EnvSpec::from_json(j.at("env")).build(window_of(j));
  const auto sources = j.value("sources", std::vector<std::int64_t>{});
  const double p = j.value("p", 0.8);
  const auto left = j.contains("left") ? Edge::from_json(j.at("left")) : Edge::sink();
  const auto right = j.contains("right") ? Edge::from_json(j.at("right")) : Edge::sink();
  auto sol = solve_traffic(env, sources, p, left, right);
  json summary = {{"recurrent", sol.recurrent}, {"max_residual", sol.max_residual}, {"sources", sol.sources}};
  fs::create_directories(c.out);
  if (augment && !sol.recurrent) {
    const auto aug = augment_source(env, sol);
    summary["added"] = aug.added;
    sol = solve_traffic(aug.env, aug.sources, p, left, right);
    summary["augmented"] = {{"recurrent", sol.recurrent}, {"max_residual", sol.max_residual}};
  }
  sol.write_csv(fs::path(c.out) / "traffic.csv");
  save_json(fs::path(c.out) / "traffic.json", summary);
  std::cout << summary.dump(2) << "\n";
  return 0;
}

/// {"env": {...}, "window": [a, b], "g": {...}, "p": 0.8, "horizon": 100,
///  "initial": {"kind": "equilibrium", "lambda": 0.3} | {"kind": "source", "x_t": 0, "fill": 0.4}
///            | {"kind": "counts", "counts": [...]},
///  "left": edge, "right": edge, "current_sites": [0]}
int sim_run(const std::string& config, const Common& c) {
  const auto j = load_json(config);
  const auto w = window_of(j);
  auto env = std::make_shared<const Environment>(EnvSpec::from_json(j.at("env")).build(w));
  const auto g = j.contains("g") ? RateFunction::from_json(j.at("g")) : RateFunction::constant();
  const double p = j.value("p", 0.8);
  const double horizon = j.at("horizon").get<double>();
  const auto left = j.contains("left") ? Edge::from_json(j.at("left")) : Edge::sink();
  const auto right = j.contains("right") ? Edge::from_json(j.at("right")) : Edge::sink();
  const auto& init = j.at("initial");
  const auto kind = init.at("kind").get<std::string>();
  Rng rng(derive_seed(c.seed, 0, StreamTag::initial));
  Configuration start;
  if (kind == "equilibrium") {
    start = ProductMeasure::equilibrium(*env, g, init.at("lambda").get<double>()).sample(rng, left, right);
  } else if (kind == "source") {
    std::optional<double> fill;
    if (init.contains("fill")) fill = init.at("fill").get<double>();
    start = make_source_configuration(*env, g, init.at("x_t").get<std::int64_t>(), fill, uniform_field(rng, w.size()));
  } else if (kind == "counts") {
    const auto counts = init.at("counts").get<std::vector<std::int64_t>>();
    start = Configuration::from_counts(w, counts, left, right);
  } else {
    throw ConfigError("unknown initial kind '" + kind + "'");
  }
  Process proc(env, g, start);
  std::vector<CurrentLedger> ledgers;
  for (auto x : j.value("current_sites", std::vector<std::int64_t>{})) ledgers.emplace_back(Path::fixed(x));
  std::vector<Observer*> obs;
  for (auto& l : ledgers) obs.push_back(&l);
  EventStream ev(derive_seed(c.seed, 0, StreamTag::harris), harris_sites(w), p);
  evolve(proc, ev, horizon, obs);

  fs::create_directories(c.out);
  {
    std::ofstream csv(fs::path(c.out) / "final.csv");
    csv << "site,eta\n";
    for (auto x = w.first; x <= w.last; ++x) {
      const auto o = proc.config()[x];
      csv << x << ',' << (o.is_infinite() ? std::string("inf") : std::to_string(o.count())) << '\n';
    }
  }
  const auto& m = proc.config().mass();
  json summary = {{"seed", c.seed},
                  {"horizon", horizon},
                  {"escaped_left", m.escaped_left},
                  {"escaped_right", m.escaped_right},
                  {"injected_left", m.injected_left},
                  {"injected_right", m.injected_right},
                  {"currents", json::array()}};
  for (const auto& l : ledgers) summary["currents"].push_back(l.to_json());
  save_json(fs::path(c.out) / "summary.json", summary);
  std::cout << summary.dump(2) << "\n";
  return 0;
}

int exp_run(const std::string& config, const Common& c, bool seed_set, bool replicas_set) {
  auto spec = ExperimentSpec::from_json(load_json(config));
  if (seed_set) spec.seed = c.seed;
  if (replicas_set) spec.replicas = c.replicas;
  const auto report = run_experiment(spec);
  const fs::path dir = spec.out.empty() || c.out != "out" ? fs::path(c.out) : spec.out;
  report.write(dir);
  for (const auto& r : report.rows) {
    if (r.informational) continue;
    std::printf("%-40s %s  empirical=%.6g se=%.3g target=%.6g tol=%.3g n=%lld\n", r.id.c_str(),
                r.pass ? "pass" : "FAIL", r.empirical, r.se, r.target, r.tolerance, static_cast<long long>(r.replicas));
  }
  std::printf("%s: %zu failing verdicts, report in %s\n", report.scenario.c_str(), report.failures(), dir.c_str());
  return report.pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Zero-range process in a random environment: simulation and analytic tools"};
  app.require_subcommand(1);
  Common common;
  auto* seed_opt = app.add_option("--seed", common.seed, "Root seed")->capture_default_str();
  auto* rep_opt = app.add_option("--replicas", common.replicas, "Replica count override");
  app.add_option("--out", common.out, "Output directory")->capture_default_str();

  std::string config, csv, sidecar;
  std::vector<double> eps = {0.2, 0.1, 0.05};
  std::vector<std::int64_t> ns = {100, 1000, 10000};
  bool augment = false;
  int status = 0;

  auto* env = app.add_subcommand("env", "Environment generation and checks");
  env->require_subcommand(1);
  auto* gen = env->add_subcommand("gen", "Write an environment as CSV plus JSON sidecar");
  gen->add_option("--config", config, "JSON with env and window")->required();
  gen->callback([&] { status = env_gen(config, common); });
  auto* check = env->add_subcommand("check", "Slow-site density surrogate on a stored environment");
  check->add_option("--csv", csv)->required();
  check->add_option("--sidecar", sidecar)->required();
  check->add_option("--eps", eps)->capture_default_str();
  check->add_option("--n", ns)->capture_default_str();
  check->callback([&] { status = env_check(csv, sidecar, eps, ns, common); });

  auto* analytic = app.add_subcommand("analytic", "Annealed density, flux and transforms");
  analytic->require_subcommand(1);
  auto* build = analytic->add_subcommand("build", "Tabulate R, f, f^, f*, fan and the front speed");
  build->add_option("--config", config, "JSON with g, law, c, p")->required();
  build->callback([&] { status = analytic_build(config, common); });

  auto* jackson = app.add_subcommand("jackson", "Traffic equations");
  jackson->require_subcommand(1);
  auto* solve = jackson->add_subcommand("solve", "Solve, optionally augment the source set");
  solve->add_option("--config", config, "JSON with env, window, sources, p, edges")->required();
  solve->add_flag("--augment", augment);
  solve->callback([&] { status = jackson_solve(config, augment, common); });

  auto* sim = app.add_subcommand("sim", "Single trajectory");
  sim->require_subcommand(1);
  auto* run = sim->add_subcommand("run", "Evolve one configuration");
  run->add_option("--config", config)->required();
  run->callback([&] { status = sim_run(config, common); });

  auto* exp = app.add_subcommand("exp", "Statistical experiments");
  exp->require_subcommand(1);
  auto* erun = exp->add_subcommand("run", "Run an experiment spec and write report.json / report.csv");
  erun->add_option("--config", config)->required();
  erun->callback([&] { status = exp_run(config, common, seed_opt->count() > 0, rep_opt->count() > 0); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return status;
}
