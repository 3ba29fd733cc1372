// perbbm: eigen, simulate, pde, stats and verify subcommands.
//
// Exit codes: 0 success, 1 acceptance criterion failed, 2 usage or config error.

#include <CLI11.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "perbbm/acceptance.hpp"
#include "perbbm/bbm_sim.hpp"
#include "perbbm/brw_sim.hpp"
#include "perbbm/config.hpp"
#include "perbbm/eigen.hpp"
#include "perbbm/fkpp.hpp"
#include "perbbm/io.hpp"
#include "perbbm/split_sampler.hpp"
#include "perbbm/stats.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace perbbm;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CriterionFailure {};

// Everything a command needs to run again: the config document and the
// arguments as JSON.
struct Invocation {
  std::string command;
  json config;
  json args;
  fs::path out;
};

ExperimentConfig config_of(const Invocation& inv) { return parse_experiment_config(inv.config.dump()); }

std::uint64_t seed_of(const Invocation& inv, const ExperimentConfig& cfg) {
  if (inv.args.contains("seed") && !inv.args["seed"].is_null()) return inv.args["seed"].get<std::uint64_t>();
  return cfg.seed.value_or(0);
}

void finish(const Invocation& inv, std::uint64_t seed, const io::Stopwatch& clock, std::vector<std::string> outputs) {
  io::RunManifest m;
  m.command = inv.command;
  m.arguments = inv.args;
  m.config = inv.config;
  m.seed = seed;
  m.wall_seconds = clock.seconds();
  outputs.push_back("manifest.json");
  m.outputs = std::move(outputs);
  io::write_manifest(inv.out, m);
}

json front_json(const FrontParams& fp) {
  json j = {{"attained", fp.attained}};
  if (fp.attained) {
    j["lambda_star"] = fp.lambda();
    j["v_star"] = fp.speed();
    j["gamma_star"] = *fp.gamma_star;
    j["log_coefficient"] = fp.log_coefficient();
    j["stationarity_gap"] = fp.stationarity_gap;
  }
  return j;
}

std::vector<double> parse_grid(const std::string& spec) {
  std::vector<double> out;
  if (spec.find(':') != std::string::npos) {
    double a = 0, b = 0, h = 0;
    char c1 = 0, c2 = 0;
    std::istringstream in(spec);
    if (!(in >> a >> c1 >> b >> c2 >> h) || c1 != ':' || c2 != ':' || !(h > 0.0) || b < a) {
      throw UsageError("grid must look like start:stop:step");
    }
    const auto n = static_cast<long>(std::floor((b - a) / h + 1e-9));
    for (long k = 0; k <= n; ++k) out.push_back(a + static_cast<double>(k) * h);
    return out;
  }
  std::istringstream in(spec);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw UsageError("bad number '" + item + "' in grid");
    }
  }
  if (out.empty()) throw UsageError("empty grid");
  return out;
}

std::vector<double> read_column(const fs::path& path, const std::string& column) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw UsageError(path.string() + " is empty");
  std::vector<std::string> header;
  {
    std::istringstream h(line);
    std::string cell;
    while (std::getline(h, cell, ',')) header.push_back(cell);
  }
  const auto it = std::find(header.begin(), header.end(), column);
  if (it == header.end()) throw UsageError(path.string() + " has no column '" + column + "'");
  const auto col = static_cast<std::size_t>(it - header.begin());
  std::vector<double> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream r(line);
    std::string cell;
    for (std::size_t i = 0; i <= col && std::getline(r, cell, ','); ++i) {
    }
    out.push_back(std::stod(cell));
  }
  return out;
}

// ---------------------------------------------------------------------------

void cmd_eigen(const Invocation& inv) {
  const io::Stopwatch clock;
  const auto cfg = config_of(inv);
  const auto lambdas = parse_grid(inv.args.value("lambda_grid", std::string("0.1:5:0.1")));
  const auto n_grid = inv.args.value("n_grid", kDefaultGrid);
  if (n_grid < kMinGrid) throw UsageError("--n-grid must be at least 4");
  io::CsvWriter csv(inv.out / "gamma.csv", {"lambda", "gamma", "residual"});
  json report;
  if (cfg.brw) {
    for (double l : lambdas) csv.row(l, brw_gamma(*cfg.brw, l), 0.0);
    report = front_json(brw_front_params(*cfg.brw));
    report["model"] = "brw";
  } else {
    for (const auto& p : gamma_curve(cfg.env, lambdas, n_grid)) csv.row(p.lambda, p.gamma, p.residual);
    report = front_json(find_front_params(cfg.env, 1e-8, n_grid));
    report["model"] = "continuous";
    report["n_grid"] = n_grid;
  }
  csv.close();
  io::write_json(inv.out / "front.json", report);
  finish(inv, 0, clock, {"gamma.csv", "front.json"});
  std::cout << report.dump(2) << '\n';
}

void cmd_simulate(const Invocation& inv) {
  const io::Stopwatch clock;
  const auto cfg = config_of(inv);
  const auto model = inv.args.value("model", std::string("bbm"));
  const auto trials = inv.args.value("trials", std::size_t{1000});
  const auto seed = seed_of(inv, cfg);
  const auto t = inv.args.value("t", 10.0);
  json summary = {{"model", model}, {"trials", trials}, {"seed", seed}};

  if (model == "brw") {
    if (!cfg.brw) throw ConfigError("--model brw needs a 'kernel' entry in the config");
    const auto n = static_cast<std::size_t>(std::llround(t));
    if (std::abs(t - static_cast<double>(n)) > 1e-9 || n < 1) throw UsageError("--t must be a positive integer for brw");
    const auto window = static_cast<long>(inv.args.value("prune_window", 10.0));
    const auto fp = require_brw_front(*cfg.brw);
    const auto s = simulate_brw(*cfg.brw, n, window, trials, seed);
    io::CsvWriter csv(inv.out / "samples.csv", {"trial", "n", "M_n", "centered"});
    for (std::size_t k = 0; k < trials; ++k) csv.row(k, n, s.max[k], s.centered[k]);
    csv.close();
    summary["front"] = front_json(fp);
    summary["m_n"] = s.m_n;
  } else if (model == "bbm" || model == "diffusion") {
    if (model == "bbm" && (!cfg.env.standard_motion() || !cfg.env.binary_offspring())) {
      throw ConfigError("--model bbm takes only g; use --model diffusion for mu, sigma or offspring");
    }
    const auto fp = require_positive_speed(cfg.env);
    const auto sampler = inv.args.value("sampler", std::string("pruned"));
    std::vector<MaxRecord> recs;
    if (sampler == "split") {
      SplitSampleOptions opt;
      opt.dt = inv.args.value("dt", kMaxDt);
      opt.split_time = inv.args.value("split_time", 4.0);
      if (!(opt.split_time > 0.0 && opt.split_time < t)) throw UsageError("--split-time must lie in (0, t)");
      recs = split_max_samples(cfg.env, fp, t, trials, seed, opt);
      summary["split_time"] = opt.split_time;
    } else {
      MaxSampleOptions opt;
      opt.dt = inv.args.value("dt", kMaxDt);
      opt.prune.window = inv.args.value("prune_window", 30.0);
      recs = max_samples(cfg.env, fp, t, trials, seed, opt);
      summary["prune_window"] = opt.prune.window;
    }
    io::CsvWriter csv(inv.out / "samples.csv", {"trial", "t", "M_t", "centered", "pruned_count"});
    for (std::size_t k = 0; k < trials; ++k) csv.row(k, t, recs[k].max, recs[k].centered, recs[k].pruned);
    csv.close();
    summary["front"] = front_json(fp);
    summary["m_t"] = front_position(fp, t);
    summary["sampler"] = sampler;
  } else {
    throw UsageError("--model must be bbm, diffusion or brw");
  }
  io::write_json(inv.out / "summary.json", summary);
  finish(inv, seed, clock, {"samples.csv", "summary.json"});
}

void cmd_pde(const Invocation& inv) {
  const io::Stopwatch clock;
  const auto cfg = config_of(inv);
  GridConfig gc;
  gc.dx = inv.args.value("dx", 1.0 / 64.0);
  const double m = cfg.env.period() / gc.dx;
  if (!(gc.dx > 0.0) || std::abs(m - std::round(m)) > 1e-9 * std::max(1.0, m)) {
    throw UsageError("--dx " + io::format_double(gc.dx) + " is not period/m for an integer m");
  }
  gc.dt = inv.args.value("dt", 0.0);
  if (gc.dt > 0.0) {
    const double bound = stable_dt(cfg.env, gc);
    if (gc.dt > bound) {
      throw UsageError("stability violation: dt = " + io::format_double(gc.dt) + " exceeds the bound " +
                       io::format_double(bound));
    }
  }
  const double t_end = inv.args.value("t_end", 400.0);
  const double level = inv.args.value("level", 0.5);
  const double fit_lo = inv.args.value("fit_lo", 50.0);
  const double fit_hi = inv.args.value("fit_hi", 400.0);
  if (fit_hi > t_end + 1e-9 || fit_lo < 0.0 || !(fit_hi > fit_lo)) throw UsageError("fit range outside solution");
  const double t0 = inv.args.value("t0", std::min(200.0, 0.5 * t_end));
  gc.keep_frames_from = std::max(0.0, t0 - 1.0);
  gc.track_level = level;

  // Level sets of u move with the mirrored process.
  const auto fp = find_front_params(reflected_env(cfg.env));
  const bool general = !cfg.env.standard_motion() || !cfg.env.binary_offspring();
  const auto sol = general ? solve_general_fkpp(cfg.env, t_end, gc) : solve_fkpp(cfg.env, t_end, gc);
  const auto tr = track_front(sol, level, fit_lo, fit_hi);
  io::CsvWriter csv(inv.out / "front.csv", {"t", "position", "invaded_mass"});
  for (std::size_t i = 0; i < sol.track_times.size(); ++i) {
    csv.row(sol.track_times[i], sol.track_positions[i], sol.invaded_mass[i]);
  }
  csv.close();
  json report = {{"v_hat", tr.v_hat},   {"c_log_hat", tr.c_log_hat}, {"b_hat", tr.b_hat},
                 {"level", level},      {"fit_lo", fit_lo},          {"fit_hi", fit_hi},
                 {"dx", sol.dx},        {"dt", sol.dt},              {"t_end", t_end},
                 {"front", front_json(fp)}, {"recenterings", sol.recenterings}, {"max_clamp", sol.max_clamp}};
  if (fp.attained) {
    report["v_rel_error"] = tr.v_hat / fp.speed() - 1.0;
    report["c_rel_error"] = tr.c_log_hat / fp.log_coefficient() - 1.0;
  }
  if (t0 + 1.0 / tr.v_hat <= t_end) {
    report["pulsating_t0"] = t0;
    report["pulsating_residual"] = pulsating_residual(sol, tr.v_hat, t0);
  }
  io::write_json(inv.out / "report.json", report);
  finish(inv, 0, clock, {"front.csv", "report.json"});
  std::cout << report.dump(2) << '\n';
}

void cmd_stats(const Invocation& inv) {
  const io::Stopwatch clock;
  const auto what = inv.args.at("what").get<std::string>();
  json report;
  std::vector<std::string> outputs = {"stats.json"};
  std::uint64_t seed = 0;
  if (what == "tail") {
    const auto x = read_column(inv.args.at("samples").get<std::string>(), "centered");
    const auto model = inv.args.value("model", std::string("y")) == "pure" ? TailModel::pure_exponential
                                                                            : TailModel::y_times_exponential;
    const auto fit = tail_fit(x, inv.args.value("y_min", 2.0), inv.args.value("y_max", 7.0), model,
                              inv.args.value("step", 0.25));
    report = {{"lambda_hat", fit.lambda_hat}, {"r2", fit.r2},       {"intercept", fit.intercept},
              {"samples", fit.samples},       {"model", model == TailModel::pure_exponential ? "pure" : "y"}};
    io::CsvWriter csv(inv.out / "tail.csv", {"y", "log_survival", "hits"});
    for (std::size_t i = 0; i < fit.y_grid.size(); ++i) csv.row(fit.y_grid[i], fit.log_survival[i], fit.hits[i]);
    csv.close();
    outputs.push_back("tail.csv");
  } else if (what == "ks") {
    const auto a = read_column(inv.args.at("samples").get<std::string>(), "centered");
    const auto b = read_column(inv.args.at("other").get<std::string>(), "centered");
    const double d = ks_distance(a, b);
    report = {{"ks", d}, {"p_value", ks_pvalue(d, a.size(), b.size())}, {"n_a", a.size()}, {"n_b", b.size()}};
  } else if (what == "subsequence") {
    const auto cfg = config_of(inv);
    const auto fp = find_front_params(cfg.env);
    const auto spec = subsequence_times(fp, inv.args.value("p", 0.0), inv.args.value("t_min", 2.0),
                                        inv.args.value("count", std::size_t{50}));
    io::CsvWriter csv(inv.out / "subsequence.csv", {"t", "m_t"});
    for (double t : spec.times) csv.row(t, front_position(fp, t));
    csv.close();
    report = {{"p", spec.p}, {"times", spec.times}};
    outputs.push_back("subsequence.csv");
  } else if (what == "nu") {
    const auto cfg = config_of(inv);
    seed = seed_of(inv, cfg);
    const auto fp = require_positive_speed(cfg.env);
    MaxSampleOptions opt;
    opt.prune.window = inv.args.value("prune_window", 6.0);
    const auto grid = parse_grid(inv.args.value("t_grid", std::string("20:21:0.25")));
    const auto pts = nu_profile(cfg.env, fp, grid, inv.args.value("y", 3.0),
                                inv.args.value("trials", std::size_t{100000}), seed, opt);
    io::CsvWriter csv(inv.out / "nu.csv", {"t", "phase", "nu_hat", "std_error", "hits", "trials"});
    for (const auto& p : pts) csv.row(p.t, p.phase, p.nu_hat, p.std_error, p.hits, p.trials);
    csv.close();
    report = {{"points", pts.size()}, {"y", inv.args.value("y", 3.0)}};
    outputs.push_back("nu.csv");
  } else {
    throw UsageError("unknown stats command '" + what + "'");
  }
  io::write_json(inv.out / "stats.json", report);
  finish(inv, seed, clock, outputs);
  std::cout << report.dump(2) << '\n';
}

void cmd_verify(const Invocation& inv) {
  const io::Stopwatch clock;
  const auto suite =
      inv.args.value("suite", std::string("fast")) == "full" ? acceptance::Suite::full : acceptance::Suite::fast;
  acceptance::Options opt;
  if (inv.args.contains("seed") && !inv.args["seed"].is_null()) opt.seed = inv.args["seed"].get<std::uint64_t>();
  if (inv.args.contains("env_override")) opt.env_override_path = inv.args["env_override"].get<std::string>();
  std::vector<int> ids = acceptance::suite_ids(suite);
  if (inv.args.contains("only")) ids = inv.args["only"].get<std::vector<int>>();
  acceptance::Runner runner(opt);
  const auto results = runner.run_all(ids, [](const acceptance::Result& r) { std::cout << r.line() << std::endl; });
  const auto doc = acceptance::report(results, suite);
  io::write_json(inv.out / "verify.json", doc);
  finish(inv, opt.seed, clock, {"verify.json"});
  if (!doc["passed"].get<bool>()) throw CriterionFailure{};
}

void dispatch(const Invocation& inv) {
  fs::create_directories(inv.out);
  if (inv.command == "eigen") return cmd_eigen(inv);
  if (inv.command == "simulate") return cmd_simulate(inv);
  if (inv.command == "pde") return cmd_pde(inv);
  if (inv.command == "stats") return cmd_stats(inv);
  if (inv.command == "verify") return cmd_verify(inv);
  throw UsageError("unknown command '" + inv.command + "'");
}

json load_config_doc(const std::string& path) {
  if (path.empty()) return json::object();
  return load_experiment_config(path).document;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Branching Brownian motion in periodic media"};
  app.require_subcommand(0, 1);
  std::string from_manifest, out_override;
  app.add_option("--from-manifest", from_manifest, "re-run the command recorded in a manifest.json");
  app.add_option("--out", out_override, "output directory (with --from-manifest)");

  std::string config_path, out = "out";
  json args = json::object();

  auto* eigen = app.add_subcommand("eigen", "gamma(lambda) curve and front constants");
  std::string lambda_grid = "0.1:5:0.1";
  std::size_t n_grid = kDefaultGrid;
  eigen->add_option("config", config_path)->required();
  eigen->add_option("--lambda-grid", lambda_grid, "start:stop:step or a comma list");
  eigen->add_option("--n-grid", n_grid);
  eigen->add_option("--out", out);

  auto* sim = app.add_subcommand("simulate", "samples of the centred maximum");
  std::string model = "bbm";
  std::string sampler = "pruned";
  double t = 10.0, dt = kMaxDt, window = 30.0, split_time = 4.0;
  std::size_t trials = 1000;
  std::uint64_t seed = 0;
  sim->add_option("config", config_path)->required();
  sim->add_option("--model", model)->check(CLI::IsMember({"bbm", "diffusion", "brw"}));
  sim->add_option("--t", t, "time, or generations for brw");
  sim->add_option("--trials", trials);
  auto* seed_opt = sim->add_option("--seed", seed);
  sim->add_option("--prune-window", window);
  sim->add_option("--sampler", sampler, "pruned: front-window pruning; split: exact completion from an F-KPP table")
      ->check(CLI::IsMember({"pruned", "split"}));
  sim->add_option("--split-time", split_time, "simulated time before the split sampler takes over");
  sim->add_option("--dt", dt);
  sim->add_option("--out", out);

  auto* pde = app.add_subcommand("pde", "F-KPP front speed, delay and pulsating residual");
  double t_end = 400.0, dx = 1.0 / 64.0, level = 0.5, fit_lo = 50.0, fit_hi = 400.0, pde_dt = 0.0, t0 = 200.0;
  pde->add_option("config", config_path)->required();
  pde->add_option("--t-end", t_end);
  pde->add_option("--dx", dx);
  pde->add_option("--dt", pde_dt, "time step (default: largest stable step)");
  pde->add_option("--level", level)->check(CLI::Range(0.1, 0.9));
  pde->add_option("--fit-lo", fit_lo);
  pde->add_option("--fit-hi", fit_hi);
  auto* t0_opt = pde->add_option("--t0", t0, "time of the pulsating check");
  pde->add_option("--out", out);

  auto* stats = app.add_subcommand("stats", "estimators on sample files");
  stats->require_subcommand(1);
  std::string samples, other, tail_model = "y", t_grid = "20:21:0.25";
  double y_min = 2.0, y_max = 7.0, step = 0.25, p = 0.0, t_min = 2.0, y = 3.0, nu_window = 6.0;
  std::size_t count = 50, nu_trials = 100000;
  std::uint64_t nu_seed = 0;
  auto* tail = stats->add_subcommand("tail", "right-tail exponent fit");
  tail->add_option("samples", samples)->required();
  tail->add_option("--y-min", y_min);
  tail->add_option("--y-max", y_max);
  tail->add_option("--step", step);
  tail->add_option("--model", tail_model)->check(CLI::IsMember({"y", "pure"}));
  tail->add_option("--out", out);
  auto* ks = stats->add_subcommand("ks", "two-sample Kolmogorov-Smirnov distance");
  ks->add_option("samples", samples)->required();
  ks->add_option("other", other)->required();
  ks->add_option("--out", out);
  auto* subseq = stats->add_subcommand("subsequence", "times with a fixed fractional part of m_t");
  subseq->add_option("config", config_path)->required();
  subseq->add_option("--p", p);
  subseq->add_option("--t-min", t_min);
  subseq->add_option("--count", count);
  subseq->add_option("--out", out);
  auto* nu = stats->add_subcommand("nu", "tail profile nu over phases");
  nu->add_option("config", config_path)->required();
  nu->add_option("--t-grid", t_grid);
  nu->add_option("--y", y);
  nu->add_option("--trials", nu_trials);
  auto* nu_seed_opt = nu->add_option("--seed", nu_seed);
  nu->add_option("--prune-window", nu_window);
  nu->add_option("--out", out);

  auto* verify = app.add_subcommand("verify", "run the acceptance criteria");
  std::string suite = "fast", env_override;
  std::vector<int> only;
  std::uint64_t verify_seed = 0;
  verify->add_option("--suite", suite)->check(CLI::IsMember({"fast", "full"}));
  verify->add_option("--only", only, "criterion numbers");
  verify->add_option("--env-override", env_override, "config replacing the periodic environment");
  auto* verify_seed_opt = verify->add_option("--seed", verify_seed);
  verify->add_option("--out", out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    Invocation inv;
    if (!from_manifest.empty()) {
      const auto m = io::RunManifest::from_json(io::read_json(from_manifest));
      inv.command = m.command;
      inv.args = m.arguments;
      inv.config = m.config;
      inv.out = out_override.empty() ? fs::path(from_manifest).parent_path() : fs::path(out_override);
    } else {
      auto* sub = app.get_subcommands().empty() ? nullptr : app.get_subcommands().front();
      if (!sub) {
        std::cerr << app.help();
        return 2;
      }
      inv.command = sub->get_name();
      if (sub == eigen) {
        args = {{"lambda_grid", lambda_grid}, {"n_grid", n_grid}};
      } else if (sub == sim) {
        args = {{"model", model}, {"t", t}, {"trials", trials}, {"prune_window", window}, {"dt", dt},
                {"sampler", sampler},   {"split_time", split_time}};
        args["seed"] = seed_opt->count() ? json(seed) : json(nullptr);
      } else if (sub == pde) {
        args = {{"t_end", t_end}, {"dx", dx},         {"level", level},
                {"fit_lo", fit_lo}, {"fit_hi", fit_hi}, {"dt", pde_dt}};
        if (t0_opt->count()) args["t0"] = t0;
      } else if (sub == stats) {
        auto* which = sub->get_subcommands().front();
        args["what"] = which->get_name();
        if (which == tail) {
          args.update({{"samples", samples}, {"y_min", y_min}, {"y_max", y_max}, {"step", step}, {"model", tail_model}});
        } else if (which == ks) {
          args.update({{"samples", samples}, {"other", other}});
        } else if (which == subseq) {
          args.update({{"p", p}, {"t_min", t_min}, {"count", count}});
        } else {
          args.update({{"t_grid", t_grid}, {"y", y}, {"trials", nu_trials}, {"prune_window", nu_window}});
          args["seed"] = nu_seed_opt->count() ? json(nu_seed) : json(nullptr);
        }
      } else if (sub == verify) {
        args = {{"suite", suite}};
        if (!only.empty()) args["only"] = only;
        if (!env_override.empty()) args["env_override"] = env_override;
        if (verify_seed_opt->count()) args["seed"] = verify_seed;
      }
      inv.args = args;
      inv.config = load_config_doc(config_path);
      inv.out = out;
    }
    dispatch(inv);
    return 0;
  } catch (const CriterionFailure&) {
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
