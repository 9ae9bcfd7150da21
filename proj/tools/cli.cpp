#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cerrno>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "ptlab/errors.hpp"
#include "ptlab/exactprob.hpp"
#include "ptlab/experiments.hpp"
#include "ptlab/inference.hpp"
#include "ptlab/predict.hpp"
#include "ptlab/verify.hpp"

#ifndef PTLAB_VERSION
#define PTLAB_VERSION "unknown"
#endif

namespace ptlab::cli {

namespace {

using json = nlohmann::json;

const std::set<std::string> kCommands{"trials", "grid", "exactprob", "predict", "fit", "test", "verify"};

// Thrown for bad flags or config that CLI11 cannot see (conflicts, bad files).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string out = "-";
  std::string manifest;
  std::string config;
  int jobs = 0;
  Seed seed = 1;
  SolverOptions solver;
};

struct Sizes {
  int ell = 0, m = 0, M = 0, B = 1;
  long S = 100;
  std::string ensemble = "rbuse";
  std::string coeffset = "box01";
  std::string policy = "fresh";
  std::string backend = "admm";
  std::vector<int> K;
  std::vector<int> ells;
  int half_width = 0;
  std::string records;
};

struct PredictArgs {
  std::string coeffset;
  int M = 0, B = 0, order = 2;
  std::vector<double> delta;
  std::vector<int> m;
};

struct ExactArgs {
  int M = 0, m = 0, B = 1;
  double q_star = 0.0;
};

struct FitArgs {
  std::string in;
  std::string link = "cll";
};

struct TestArgs {
  double ybar = 0.0;
  long T = 0, S = 0;
  int B = 1;
  double alpha = 0.05;
  double q_star = 0.0;
  int ell = 0, m = 0, M = 0;
  std::string ensemble = "rbuse";
  std::string coeffset = "box01";
};

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw UsageError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write '" + path + "'");
  f << text;
  if (!f) throw std::runtime_error("write failed for '" + path + "'");
}

std::string flag_name(const std::string& tok) {
  if (tok.rfind("--", 0) != 0) return {};
  return tok.substr(2, tok.find('=') == std::string::npos ? std::string::npos : tok.find('=') - 2);
}

std::string token(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_array()) {
    std::string s;
    for (const auto& e : v) s += (s.empty() ? "" : ",") + token(e);
    return s;
  }
  return v.dump();
}

// Config keys are flag names; explicit flags win. A manifest works as a
// config since it stores the resolved flags under "config".
struct Prepared {
  std::vector<std::string> args;
  std::set<std::string> from_config;
};

Prepared apply_config(std::vector<std::string> args) {
  Prepared p;
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty()) {
    p.args = std::move(args);
    return p;
  }
  json cfg;
  try {
    cfg = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw UsageError("config '" + path + "' is not valid JSON: " + e.what());
  }
  if (!cfg.is_object()) throw UsageError("config '" + path + "' must be a JSON object");
  std::string command = cfg.value("command", "");
  if (cfg.contains("config") && cfg["config"].is_object()) cfg = cfg["config"];

  if ((args.empty() || !kCommands.count(args[0])) && !command.empty()) args.insert(args.begin(), command);
  std::set<std::string> given;
  for (const auto& a : args) given.insert(flag_name(a));
  for (const auto& [key, value] : cfg.items()) {
    if (key == "command" || key == "config" || value.is_null() || given.count(key)) continue;
    args.push_back("--" + key);
    args.push_back(token(value));
    p.from_config.insert(key);
  }
  p.args = std::move(args);
  return p;
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "JSON file whose keys are flag names");
  sub->add_option("--out", c.out, "results file, - for stdout");
  sub->add_option("--manifest", c.manifest, "manifest path (default <out>.manifest.json)");
  sub->add_option("--jobs", c.jobs, "worker threads, 0 for all cores")->check(CLI::NonNegativeNumber);
  sub->add_option("--seed", c.seed, "master seed (PTLAB_SEED overrides)");
  sub->add_option("--feas-tol", c.solver.feas_tol, "solver feasibility tolerance")->check(CLI::PositiveNumber);
  sub->add_option("--obj-tol", c.solver.obj_tol, "solver duality-gap tolerance")->check(CLI::PositiveNumber);
  sub->add_option("--max-iters", c.solver.max_iters, "solver iteration cap")->check(CLI::PositiveNumber);
  sub->add_option("--rho", c.solver.rho, "ADMM penalty")->check(CLI::PositiveNumber);
}

const auto kCoeffCheck = CLI::Validator(
    [](std::string& s) -> std::string {
      try {
        CoefficientSet::parse(s);
        return {};
      } catch (const std::exception& e) {
        return e.what();
      }
    },
    "COEFFSET", "");

void add_campaign(CLI::App* sub, Sizes& s, bool with_ell) {
  if (with_ell) sub->add_option("--ell", s.ell, "free entries per block")->required()->check(CLI::NonNegativeNumber);
  sub->add_option("--m", s.m, "rows per block")->required()->check(CLI::PositiveNumber);
  sub->add_option("--M", s.M, "columns per block")->required()->check(CLI::PositiveNumber);
  sub->add_option("--B", s.B, "number of blocks")->check(CLI::PositiveNumber);
  sub->add_option("--S", s.S, "trials per cell")->check(CLI::NonNegativeNumber);
  sub->add_option("--ensemble", s.ensemble, "rbuse, dbuse or rbpft")->check(CLI::IsMember({"rbuse", "dbuse", "rbpft"}));
  sub->add_option("--coeffset", s.coeffset, "box01, nonneg, real or complex")->check(kCoeffCheck);
  sub->add_option("--policy", s.policy, "fresh or fixed matrix")->check(CLI::IsMember({"fresh", "fixed"}));
  sub->add_option("--K", s.K, "fixed Fourier rows for rbpft")->delimiter(',');
  sub->add_option("--backend", s.backend, "admm, or ipm (interior point, blocks up to 64 reals)")
      ->check(CLI::IsMember({"admm", "ipm"}));
}

TrialConfig trial_config(const Sizes& s, const Common& c) {
  TrialConfig t;
  t.sizes = {s.ell, s.m, s.M, s.B};
  t.ensemble = s.ensemble;
  t.coeff_set = CoefficientSet::parse(s.coeffset);
  t.S = s.S;
  t.master_seed = c.seed;
  t.policy = s.policy == "fixed" ? MatrixPolicy::FIXED : MatrixPolicy::FRESH;
  t.K = s.K;
  t.solver = c.solver;
  t.backend = parse_backend(s.backend);
  t.jobs = c.jobs;
  return t;
}

std::string fmt(double v) { return format_double(v); }

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Only flags that were set; defaults are pinned by the version.
json resolved_flags(const CLI::App* sub, const Common& c) {
  json j = json::object();
  for (const CLI::Option* opt : sub->get_options()) {
    const std::string name = opt->get_single_name();
    if (name.empty() || name == "help" || name == "config" || name == "manifest" || name == "seed") continue;
    std::string joined;
    for (const auto& r : opt->results()) joined += (joined.empty() ? "" : ",") + r;
    if (opt->count() > 0) j[name] = joined;
  }
  j["seed"] = std::to_string(c.seed);
  return j;
}

struct Outcome {
  std::string text;  // results payload
  json summary = json::object();
  int code = kOk;
};

Outcome do_trials(const Sizes& s, const Common& c) {
  const TrialConfig cfg = trial_config(s, c);
  const auto records = run_trials(cfg);
  SuccessTable t;
  t.rows.push_back(summarize(cfg, records));
  std::ostringstream os;
  write_success_csv(os, t);
  Outcome o{os.str()};
  if (!s.records.empty()) {
    std::ostringstream rs;
    rs << "trial_index,ell,m,M,B,ensemble,coeffset,seed,rel_error,success,status,iterations\n";
    for (const auto& r : records)
      rs << r.trial_index << ',' << r.sizes.ell << ',' << r.sizes.m << ',' << r.sizes.M << ',' << r.sizes.B << ','
         << r.ensemble << ',' << r.coeff_set.name() << ',' << r.master_seed << ',' << fmt(r.rel_error) << ','
         << (r.success ? 1 : 0) << ',' << to_string(r.status) << ',' << r.iterations << '\n';
    write_file(s.records, rs.str());
    o.summary["records"] = s.records;
  }
  long not_converged = 0;
  for (const auto& r : records) not_converged += r.status != SolveStatus::CONVERGED;
  o.summary["not_converged"] = not_converged;
  return o;
}

Outcome do_grid(const Sizes& s, const Common& c) {
  GridConfig g;
  g.base = trial_config(s, c);
  g.ells = s.ells;
  g.half_width = s.half_width;
  std::ostringstream os;
  write_success_csv(os, run_phase_grid(g));
  return {os.str()};
}

Outcome do_exactprob(const ExactArgs& a, bool has_q) {
  std::ostringstream os;
  os << "ell,Q_sb,Q_mb\n";
  for (int ell = 0; ell <= a.M; ++ell)
    os << ell << ',' << fmt(q_sb_exact(ell, a.m, a.M)) << ',' << fmt(q_mb_exact(ell, a.m, a.M, a.B)) << '\n';
  Outcome o{os.str()};
  const double q = has_q ? a.q_star : default_q_star(a.B);
  o.summary["q_star"] = q;
  try {
    const auto cs = critical_ell(a.m, a.M, a.B, q);
    o.summary["ell_star"] = cs.ell_star;
    o.summary["ell_minus"] = cs.ell_minus;
    o.summary["eps_star"] = cs.eps_star;
  } catch (const std::domain_error& e) {
    o.summary["ell_star"] = nullptr;
    o.summary["note"] = e.what();
  }
  return o;
}

Outcome do_predict(const PredictArgs& a) {
  const CoefficientSet set = CoefficientSet::parse(a.coeffset);
  const int B = a.B > 0 ? a.B : a.M;
  if (!a.delta.empty() && !a.m.empty()) throw UsageError("give --delta or --m, not both");
  std::vector<int> ms = a.m;
  bool sweep = false;
  for (double d : a.delta) {
    if (!(d > 0.0 && d <= 1.0)) throw UsageError("--delta values must lie in (0, 1]");
    ms.push_back(static_cast<int>(std::lround(d * a.M)));
  }
  if (ms.empty()) {
    sweep = true;
    for (int i = 1; i <= 19; ++i) ms.push_back(static_cast<int>(std::lround(0.05 * i * a.M)));
  }
  std::ostringstream os;
  os << "delta,m,M,B,coeffset,order,eps_asy,eps_bd_first,eps_bd_second,eps_bd,gamma,rel_offset_first,"
        "rel_offset_second,extrapolated\n";
  bool extrapolated = false;
  for (int m : ms) {
    if (m < 1 || m > a.M) throw UsageError("m = " + std::to_string(m) + " outside [1, M]");
    OffsetPrediction p;
    try {
      p = predict_pt(m, a.M, B, set, a.order);
    } catch (const std::domain_error&) {
      if (sweep) continue;  // BOX01 below delta = 1/2 has no finite-N formula
      throw;
    }
    extrapolated = extrapolated || p.extrapolated;
    os << fmt(p.delta) << ',' << m << ',' << a.M << ',' << B << ',' << set.name() << ',' << p.order << ','
       << fmt(p.eps_asy) << ',' << fmt(p.eps_bd_first) << ',' << fmt(p.eps_bd_second) << ',' << fmt(p.eps_bd) << ','
       << fmt(p.gamma) << ',' << fmt(p.rel_offset_first) << ',' << fmt(p.rel_offset_second) << ','
       << (p.extrapolated ? 1 : 0) << '\n';
  }
  Outcome o{os.str()};
  o.summary["extrapolated"] = extrapolated;
  return o;
}

Outcome do_fit(const FitArgs& a) {
  const Link link = parse_link(a.link);
  std::ifstream f(a.in, std::ios::binary);
  if (!f) throw UsageError("cannot read '" + a.in + "'");
  const SuccessTable table = read_success_csv(f);

  // one fit per (m, M, B, ensemble, coeffset), in order of first appearance
  std::vector<std::string> order;
  std::map<std::string, SuccessTable> groups;
  for (const auto& r : table.rows) {
    const std::string key = std::to_string(r.m) + ',' + std::to_string(r.M) + ',' + std::to_string(r.B) + ',' +
                            r.ensemble + ',' + r.coeffset;
    if (!groups.count(key)) order.push_back(key);
    groups[key].rows.push_back(r);
  }
  std::ostringstream os;
  os << "delta,eps_star,se,m,M,B,ensemble,coeffset,link,a,b,se_a,se_b,status\n";
  long failed = 0;
  for (const auto& key : order) {
    const auto& g = groups[key];
    const auto& r0 = g.rows.front();
    const double delta = static_cast<double>(r0.m) / r0.M;
    std::string status = "ok";
    QuantalFit fit;
    double eps = std::nan(""), se = std::nan("");
    try {
      fit = fit_quantal(cells_from_table(g), link);
      if (!fit.converged) {
        status = "not_converged";
      } else {
        eps = empirical_pt(fit);
        se = fit.se_eps_star;
      }
    } catch (const SeparationError&) {
      status = "separated";
    } catch (const std::invalid_argument&) {
      status = "too_few_levels";
    } catch (const std::domain_error&) {
      status = "bad_slope";
    }
    failed += status != "ok";
    os << fmt(delta) << ',' << fmt(eps) << ',' << fmt(se) << ',' << key << ',' << to_string(link) << ','
       << fmt(fit.a) << ',' << fmt(fit.b) << ',' << fmt(fit.se_a) << ',' << fmt(fit.se_b) << ',' << status << '\n';
  }
  Outcome o{os.str()};
  o.summary["groups"] = order.size();
  o.summary["failed_fits"] = failed;
  return o;
}

Outcome do_test(const TestArgs& a, const CLI::App* sub, const Common& c) {
  const bool has_ybar = sub->count("--ybar") > 0, has_T = sub->count("--T") > 0;
  const bool campaign = sub->count("--ell") > 0 || sub->count("--m") > 0 || sub->count("--M") > 0;
  if (has_ybar + has_T + campaign != 1)
    throw UsageError("test needs exactly one of --ybar, --T, or a campaign (--ell --m --M)");
  if (campaign && !(sub->count("--ell") && sub->count("--m") && sub->count("--M")))
    throw UsageError("a campaign needs --ell, --m and --M");
  double ybar = a.ybar;
  long T = -1;
  if (has_T) {
    if (a.T < 0 || a.T > a.S) throw UsageError("--T must lie in [0, S]");
    T = a.T;
    ybar = static_cast<double>(T) / a.S;
  }
  if (campaign) {
    const auto r = single_block_campaign(a.ell, a.m, a.M, a.S, c.seed, CoefficientSet::parse(a.coeffset), a.ensemble,
                                         c.solver, c.jobs);
    ybar = r.y_bar;
    T = r.T;
  }
  const double q = sub->count("--q-star") ? a.q_star : default_q_star(a.B);
  const auto d = hypothesis_test(ybar, a.S, a.B, q, a.alpha);
  std::ostringstream os;
  os << "y_bar,T,S,B,q_star,alpha,mu,lo,hi,z,outcome\n";
  os << fmt(d.y_bar) << ',' << (T >= 0 ? std::to_string(T) : std::string()) << ',' << a.S << ',' << a.B << ','
     << fmt(q) << ',' << fmt(a.alpha) << ',' << fmt(d.mu) << ',' << fmt(d.lo) << ',' << fmt(d.hi) << ','
     << fmt(d.z) << ',' << to_string(d.outcome) << '\n';
  Outcome o{os.str()};
  o.summary["outcome"] = to_string(d.outcome);
  return o;
}

Outcome do_verify(const Common& c) {
  const json report = run_verify_suite(c.solver, c.seed);
  Outcome o{report.dump(2) + "\n"};
  o.summary["pass"] = report.at("pass");
  o.code = report.at("pass").get<bool>() ? kOk : kCheckFailed;
  return o;
}

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Finite-N phase transitions for block-diagonal and partial Fourier sparse recovery", "ptlab"};
  app.require_subcommand(1);
  app.set_version_flag("--version", PTLAB_VERSION);

  Common c;
  Sizes s;
  PredictArgs pa;
  ExactArgs ea;
  FitArgs fa;
  TestArgs ta;

  auto* trials = app.add_subcommand("trials", "Monte-Carlo success rate at one (ell, m, M, B)");
  add_common(trials, c);
  add_campaign(trials, s, true);
  trials->add_option("--records", s.records, "also write one CSV line per trial here");

  auto* grid = app.add_subcommand("grid", "success rates over a sweep of ell");
  add_common(grid, c);
  add_campaign(grid, s, false);
  grid->add_option("--ells", s.ells, "explicit ell values")->delimiter(',');
  grid->add_option("--half-width", s.half_width, "window half width around the prediction")
      ->check(CLI::NonNegativeNumber);

  auto* exact = app.add_subcommand("exactprob", "exact BOX01 success probabilities for ell = 0..M");
  add_common(exact, c);
  exact->add_option("--M", ea.M, "columns per block")->required()->check(CLI::PositiveNumber);
  exact->add_option("--m", ea.m, "rows per block")->required()->check(CLI::PositiveNumber);
  exact->add_option("--B", ea.B, "number of blocks")->check(CLI::PositiveNumber);
  exact->add_option("--q-star", ea.q_star, "target probability (default 1/2 or 1-1/e)")->check(CLI::Range(0.0, 1.0));

  auto* predict = app.add_subcommand("predict", "asymptotic and finite-N transition predictions");
  add_common(predict, c);
  predict->add_option("--coeffset", pa.coeffset, "box01, nonneg, real or complex")->required()->check(kCoeffCheck);
  predict->add_option("--M", pa.M, "columns per block")->required()->check(CLI::PositiveNumber);
  predict->add_option("--B", pa.B, "number of blocks (default M)")->check(CLI::PositiveNumber);
  predict->add_option("--delta", pa.delta, "undersampling ratios, m = round(delta M)")->delimiter(',');
  predict->add_option("--m", pa.m, "rows per block, instead of --delta")->delimiter(',');
  predict->add_option("--order", pa.order, "1 or 2")->check(CLI::IsMember({1, 2}));

  auto* fit = app.add_subcommand("fit", "quantal-response fit of a success CSV");
  add_common(fit, c);
  fit->add_option("--in", fa.in, "success CSV from trials or grid")->required();
  fit->add_option("--link", fa.link, "cll or probit")->check(CLI::IsMember({"cll", "probit"}));

  auto* test = app.add_subcommand("test", "large-N hypothesis test on a single-block failure rate");
  add_common(test, c);
  test->add_option("--ybar", ta.ybar, "observed failure fraction")->check(CLI::Range(0.0, 1.0));
  test->add_option("--T", ta.T, "observed failure count");
  test->add_option("--S", ta.S, "trials")->required()->check(CLI::PositiveNumber);
  test->add_option("--B", ta.B, "blocks of the multiblock problem")->required()->check(CLI::PositiveNumber);
  test->add_option("--alpha", ta.alpha, "test level")->check(CLI::Range(0.0, 1.0));
  test->add_option("--q-star", ta.q_star, "target probability (default from B)")->check(CLI::Range(0.0, 1.0));
  test->add_option("--ell", ta.ell, "run a campaign: free entries")->check(CLI::NonNegativeNumber);
  test->add_option("--m", ta.m, "run a campaign: rows")->check(CLI::PositiveNumber);
  test->add_option("--M", ta.M, "run a campaign: columns")->check(CLI::PositiveNumber);
  test->add_option("--ensemble", ta.ensemble, "campaign ensemble")->check(CLI::IsMember({"rbuse", "dbuse", "rbpft"}));
  test->add_option("--coeffset", ta.coeffset, "campaign coefficient set")->check(kCoeffCheck);

  auto* verify = app.add_subcommand("verify", "structural and equivalence checks, JSON report");
  add_common(verify, c);

  std::string seed_source = "default";
  CLI::App* sub = nullptr;
  try {
    const std::vector<std::string> original = raw_args;
    Prepared p = apply_config(raw_args);
    std::vector<std::string> rev(p.args.rbegin(), p.args.rend());
    app.parse(rev);
    sub = app.get_subcommands().front();

    for (const auto& a : original)
      if (flag_name(a) == "seed") seed_source = "flag";
    if (seed_source == "default" && p.from_config.count("seed")) seed_source = "config";
    if (const char* env = std::getenv("PTLAB_SEED"); env && *env) {
      char* end = nullptr;
      errno = 0;
      const unsigned long long v = std::strtoull(env, &end, 10);
      if (*end != '\0' || errno == ERANGE || env[0] == '-') throw UsageError("PTLAB_SEED must be an unsigned integer");
      c.seed = v;
      seed_source = "env";
    }
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  } catch (const UsageError& e) {
    err << "ptlab: usage error: " << e.what() << "\n";
    return kUsage;
  }

  const std::string cmd = sub->get_name();
  Outcome o;
  try {
    if (sub == trials) o = do_trials(s, c);
    else if (sub == grid) o = do_grid(s, c);
    else if (sub == exact) o = do_exactprob(ea, exact->count("--q-star") > 0);
    else if (sub == predict) o = do_predict(pa);
    else if (sub == fit) o = do_fit(fa);
    else if (sub == test) o = do_test(ta, test, c);
    else o = do_verify(c);
  } catch (const GuardError& e) {
    err << "ptlab " << cmd << ": refused: " << e.what() << "\n";
    return kGuard;
  } catch (const UsageError& e) {
    err << "ptlab " << cmd << ": usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::invalid_argument& e) {
    err << "ptlab " << cmd << ": invalid input: " << e.what() << "\n";
    return kUsage;
  } catch (const std::domain_error& e) {
    err << "ptlab " << cmd << ": invalid input: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "ptlab " << cmd << ": error: " << e.what() << "\n";
    return kRuntime;
  }

  json manifest;
  manifest["tool"] = "ptlab";
  manifest["version"] = PTLAB_VERSION;
  manifest["command"] = cmd;
  manifest["config"] = resolved_flags(sub, c);
  manifest["seed"] = c.seed;
  manifest["seed_source"] = seed_source;
  manifest["timestamp"] = utc_now();
  manifest["summary"] = o.summary;
  manifest["exit_code"] = o.code;

  try {
    if (c.out == "-") {
      out << o.text;
    } else {
      write_file(c.out, o.text);
    }
    const std::string mpath = !c.manifest.empty() ? c.manifest : c.out != "-" ? c.out + ".manifest.json" : "";
    manifest["results"] = c.out;
    if (mpath.empty()) {
      err << manifest.dump() << "\n";
    } else {
      write_file(mpath, manifest.dump(2) + "\n");
    }
  } catch (const std::exception& e) {
    err << "ptlab " << cmd << ": error: " << e.what() << "\n";
    return kRuntime;
  }
  return o.code;
}

}  // namespace ptlab::cli
