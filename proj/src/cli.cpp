#include "macbound/cli.hpp"

#include "macbound/amp_sim.hpp"
#include "macbound/bounds.hpp"
#include "macbound/parallel.hpp"
#include "macbound/potential.hpp"
#include "macbound/scalar_channel.hpp"
#include "macbound/state_evolution.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>

#ifndef MACBOUND_VERSION
#define MACBOUND_VERSION "unknown"
#endif

namespace macbound {

namespace {

using nlohmann::json;

struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

std::string num(double x) {
  if (std::isnan(x)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

json num_json(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

// A table plus everything that goes into the trailing metadata block.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::pair<std::string, std::string>> notes;
  json extra = json::object();
};

struct Common {
  std::string channel = "awgn";
  int k = 1;
  std::string output;
  std::string format = "csv";
  std::optional<double> E;
  std::optional<double> ebn0_db;

  ChannelModel channel_model() const { return ChannelModel(parse_channel_kind(channel), k); }

  double energy(const ChannelModel& ch) const {
    if (E && ebn0_db) throw UsageError("--E and --ebn0-db are mutually exclusive");
    if (E) {
      if (!(*E > 0.0)) throw UsageError("--E must be > 0");
      return *E;
    }
    if (ebn0_db) return energy_from_ebn0_db(ch, *ebn0_db);
    throw UsageError("one of --E or --ebn0-db is required");
  }
};

void add_common(CLI::App* sub, Common& c, bool needs_energy) {
  sub->add_option("--channel", c.channel, "awgn or qsf")->check(CLI::IsMember({"awgn", "qsf"}));
  sub->add_option("--k", c.k, "payload bits per user")->check(CLI::Range(1, 1000));
  sub->add_option("-o,--output", c.output, "output file (stdout when empty)");
  sub->add_option("--format", c.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  if (needs_energy) {
    auto* e = sub->add_option("--E", c.E, "total energy per codeword");
    auto* db = sub->add_option("--ebn0-db", c.ebn0_db, "energy per bit over N0 in dB");
    e->excludes(db);
  }
}

std::string resolved_value(const CLI::Option* opt) {
  if (opt->count() > 0) {
    std::string out;
    for (const auto& r : opt->reduced_results()) out += (out.empty() ? "" : " ") + r;
    return out;
  }
  return opt->get_default_str();
}

std::vector<std::pair<std::string, std::string>> resolved_config(const CLI::App* sub) {
  std::vector<std::pair<std::string, std::string>> out;
  out.emplace_back("command", sub->get_name());
  for (const CLI::Option* opt : sub->get_options()) {
    const std::string name = opt->get_single_name();
    if (name == "help" || name == "h" || name == "output" || name == "o") continue;
    std::string value = resolved_value(opt);
    if (!value.empty()) out.emplace_back(name, std::move(value));
  }
  return out;
}

void write_atomic(const std::string& path, const std::string& content) {
  if (path.empty()) {
    std::cout << content << std::flush;
    return;
  }
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open '" + tmp.string() + "' for writing");
    os << content;
    os.flush();
    if (!os) throw std::runtime_error("write to '" + tmp.string() + "' failed");
  }
  fs::rename(tmp, target);
}

std::string render(const CLI::App* sub, const Common& c, const Table& t) {
  const auto config = resolved_config(sub);
  if (c.format == "json") {
    json doc;
    doc["version"] = MACBOUND_VERSION;
    json cfg = json::object();
    for (const auto& [k, v] : config) cfg[k] = v;
    doc["config"] = cfg;
    json rows = json::array();
    for (const auto& row : t.rows) {
      json obj = json::object();
      for (std::size_t i = 0; i < t.header.size(); ++i) {
        const std::string& cell = row[i];
        char* end = nullptr;
        const double v = std::strtod(cell.c_str(), &end);
        if (cell == "nan") {
          obj[t.header[i]] = nullptr;
        } else if (end != cell.c_str() && *end == '\0') {
          obj[t.header[i]] = v;
        } else {
          obj[t.header[i]] = cell;
        }
      }
      rows.push_back(std::move(obj));
    }
    doc["rows"] = std::move(rows);
    for (auto& [k, v] : t.extra.items()) doc[k] = v;
    return doc.dump(2) + "\n";
  }
  std::ostringstream os;
  for (std::size_t i = 0; i < t.header.size(); ++i) os << (i ? "," : "") << t.header[i];
  os << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
    os << '\n';
  }
  os << "# macbound " << MACBOUND_VERSION << '\n';
  for (const auto& [k, v] : config) os << "# config " << k << '=' << v << '\n';
  for (const auto& [k, v] : t.notes) os << "# " << k << ' ' << v << '\n';
  return os.str();
}

// --- scalar --------------------------------------------------------------------

struct ScalarArgs {
  std::optional<double> tau;
  std::string tau_grid;
  std::string op = "mmse";
  std::optional<double> theta;
};

Table run_scalar(const Common& c, const ScalarArgs& a, int& status) {
  const ChannelModel ch = c.channel_model();
  if (a.tau.has_value() == !a.tau_grid.empty()) throw UsageError("give exactly one of --tau or --tau-grid");
  const std::vector<double> taus = a.tau ? std::vector<double>{*a.tau} : parse_grid(a.tau_grid);
  for (double t : taus) {
    if (!(t > 0.0)) throw UsageError("--tau must be > 0, got " + num(t));
  }
  Table t;
  t.header = {"tau", a.op};
  int failures = 0;
  for (double tau : taus) {
    double v = std::nan("");
    try {
      if (a.op == "mmse") {
        v = mmse_scaled(ch, tau);
      } else if (a.op == "mi") {
        v = mutual_info_scaled(ch, tau);
      } else if (a.op == "epsilon-star") {
        v = epsilon_star(tau, ch).epsilon;
      } else if (a.op == "pi-star") {
        v = pi_star(tau, ch);
      } else if (a.op == "threshold") {
        v = optimal_threshold(ch, tau);
      } else if (a.op == "psi") {
        v = psi_support_error_scaled(ch, tau, a.theta ? *a.theta : optimal_threshold(ch, tau));
      } else if (a.op == "bound") {
        v = ch.kind() == ChannelKind::Qsf ? pi_star(tau, ch) : epsilon_star_bound(tau, ch);
      }
    } catch (const std::domain_error& e) {
      ++failures;
      t.notes.emplace_back("warning", "tau=" + num(tau) + ": " + e.what());
      std::cerr << "warning: tau=" << num(tau) << ": " << e.what() << '\n';
    }
    t.rows.push_back({num(tau), num(v)});
  }
  if (failures == static_cast<int>(taus.size())) status = kExitFailure;
  return t;
}

// --- potential -----------------------------------------------------------------

struct PotentialArgs {
  double mu = 0.1;
  int grid_points = 2048;
};

Table run_potential(const Common& c, const PotentialArgs& a) {
  const ChannelModel ch = c.channel_model();
  const SystemParams p{a.mu, c.energy(ch), ch};
  validate(p);
  LandscapeOptions opt;
  opt.grid_points = a.grid_points;
  const PotentialLandscape land = global_minimizer(p, opt);
  Table t;
  t.header = {"tau", "F", "is_min"};
  for (const auto& s : land.samples) t.rows.push_back({num(s.tau), num(s.F), s.is_min ? "1" : "0"});
  json minima = json::array();
  for (const auto& m : land.minima) {
    t.notes.emplace_back("minimum", "tau=" + num(m.tau) + " F=" + num(m.F) + (m.at_boundary ? " boundary" : ""));
    minima.push_back({{"tau", m.tau}, {"F", m.F}, {"at_boundary", m.at_boundary}});
  }
  t.notes.emplace_back("global_argmin_max", num(land.global_argmin_max));
  t.notes.emplace_back("tie", land.tie ? "1" : "0");
  t.notes.emplace_back("E", num(p.E));
  t.extra["minima"] = minima;
  t.extra["global_argmin_max"] = land.global_argmin_max;
  t.extra["tie"] = land.tie;
  t.extra["boundary_min"] = land.boundary_min;
  t.extra["E"] = p.E;
  return t;
}

// --- se ------------------------------------------------------------------------

struct CouplingArgs {
  int omega = 1;
  int Lambda = 1;
  double rho = 0.0;
  BaseMatrix base() const {
    if (omega == 1 && Lambda == 1 && rho == 0.0) return BaseMatrix::uncoupled();
    return BaseMatrix(omega, Lambda, rho);
  }
};

void add_coupling(CLI::App* sub, CouplingArgs& a) {
  sub->add_option("--omega", a.omega, "coupling width")->check(CLI::PositiveNumber);
  sub->add_option("--Lambda", a.Lambda, "number of column blocks")->check(CLI::PositiveNumber);
  sub->add_option("--rho", a.rho, "off-band mass in [0, 1)")->check(CLI::Range(0.0, 1.0));
}

SeInit parse_init(const std::string& s) { return s == "infinite" ? SeInit::Infinite : SeInit::ZeroEstimate; }

struct SeArgs {
  double mu = 0.1;
  CouplingArgs coupling;
  std::string init = "infinite";
  double tol = 1e-10;
  int t_max = 10000;
};

Table run_se(const Common& c, const SeArgs& a) {
  const ChannelModel ch = c.channel_model();
  const BaseMatrix base = a.coupling.base();
  const SeProblem prob{ch, base, a.mu, c.energy(ch)};
  SeRunOptions opt;
  opt.tol = a.tol;
  opt.t_max = a.t_max;
  opt.init = parse_init(a.init);
  const SeResult res = se_run(prob, opt);
  Table t;
  t.header = {"t", "max_tau"};
  for (int col = 0; col < base.cols(); ++col) t.header.push_back("tau_" + std::to_string(col));
  for (const auto& s : res.trajectory) {
    std::vector<std::string> row{std::to_string(s.t), num(*std::max_element(s.tau.begin(), s.tau.end()))};
    for (double v : s.tau) row.push_back(num(v));
    t.rows.push_back(std::move(row));
  }
  const auto pred = coupled_pupe_prediction(ch, res.profile());
  const double ser = section_error_prediction(ch, res.profile(), pred.thresholds);
  t.notes.emplace_back("converged", res.converged ? "1" : "0");
  t.notes.emplace_back("E", num(prob.E));
  t.notes.emplace_back("predicted_pupe", num(pred.pupe));
  t.notes.emplace_back("predicted_section_error", num(ser));
  t.extra["converged"] = res.converged;
  t.extra["E"] = prob.E;
  t.extra["predicted_pupe"] = num_json(pred.pupe);
  t.extra["predicted_section_error"] = num_json(ser);
  t.extra["thresholds"] = pred.thresholds;
  return t;
}

// --- bound ---------------------------------------------------------------------

struct BoundArgs {
  std::optional<double> mu;
  std::string mu_grid;
  double eps = 1e-3;
  std::string kind = "coupled";
  double lo_db = -5.0;
  double hi_db = 100.0;
  bool no_warm_start = false;
};

Table run_bound(const Common& c, const BoundArgs& a) {
  const ChannelModel ch = c.channel_model();
  if (a.mu.has_value() == !a.mu_grid.empty()) throw UsageError("give exactly one of --mu or --mu-grid");
  if (!(a.eps > 0.0 && a.eps < 1.0)) throw UsageError("--eps must lie in (0, 1), got " + num(a.eps));
  if (!(a.hi_db > a.lo_db)) throw UsageError("--hi-db must exceed --lo-db");
  const std::vector<double> grid = a.mu ? std::vector<double>{*a.mu} : parse_grid(a.mu_grid);
  for (double m : grid) {
    if (!(m > 0.0)) throw UsageError("--mu values must be > 0, got " + num(m));
  }
  SweepOptions opt;
  opt.lo_db = a.lo_db;
  opt.hi_db = a.hi_db;
  opt.kind = a.kind == "uncoupled" ? BoundKind::Uncoupled : BoundKind::Coupled;
  opt.warm_start = !a.no_warm_start;
  const auto recs = sweep_curve(ch, grid, a.eps, opt);
  Table t;
  t.header = {"mu", "ebn0_db", "E", "tau_star", "pupe", "phase_flag"};
  int failed = 0;
  json messages = json::array();
  for (const auto& r : recs) {
    t.rows.push_back({num(r.mu), num(r.ebn0_db), num(r.E), num(r.tau_star), num(r.pupe),
                      std::string(to_string(r.flag))});
    if (!r.ok()) {
      ++failed;
      t.notes.emplace_back("failed", "mu=" + num(r.mu) + ": " + r.message);
      messages.push_back({{"mu", r.mu}, {"message", r.message}});
    }
  }
  const double single = single_user_ebn0_db(ch, a.eps);
  t.notes.emplace_back("single_user_ebn0_db", num(single));
  t.extra["single_user_ebn0_db"] = single;
  t.extra["failed_rows"] = messages;
  if (failed > 0) {
    std::cerr << "warning: " << failed << " of " << recs.size()
              << " grid points have no solution inside the Eb/N0 window (phase_flag=failed)\n";
  }
  return t;
}

// --- simulate ------------------------------------------------------------------

struct SimArgs {
  int n = 4320;
  int K = 432;
  int T = 0;
  int trials = 1;
  std::uint64_t seed = 1;
  CouplingArgs coupling{3, 16, 0.0};
  std::string init = "zero";
  double threshold_scale = 1.0;
};

Table run_simulate(const Common& c, const SimArgs& a, int& status) {
  SimConfig cfg;
  cfg.ch = c.channel_model();
  if (cfg.ch.k() > 12) throw UsageError("--k must be <= 12 for simulate, got " + std::to_string(cfg.ch.k()));
  cfg.n = a.n;
  cfg.K = a.K;
  cfg.base = a.coupling.base();
  cfg.E = c.energy(cfg.ch);
  cfg.T = a.T;
  cfg.trials = a.trials;
  cfg.master_seed = a.seed;
  cfg.init = parse_init(a.init);
  cfg.threshold_scale = a.threshold_scale;
  try {
    validate(cfg);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const MonteCarloReport rep = monte_carlo(cfg);
  Table t;
  t.header = {"trial", "ser", "m_dh", "energy_mean"};
  json errors = json::array();
  for (const auto& r : rep.trials) {
    if (r.ok()) {
      t.rows.push_back({std::to_string(r.trial), num(r.ser), num(r.m_dh), num(r.energy_mean)});
    } else {
      t.rows.push_back({std::to_string(r.trial), "nan", "nan", "nan"});
      t.notes.emplace_back("failed_trial", std::to_string(r.trial) + ": " + r.error);
      errors.push_back({{"trial", r.trial}, {"error", r.error}});
    }
  }
  t.rows.push_back({"mean", num(rep.ser_mean), num(rep.m_dh_mean), num(rep.energy_mean)});
  t.notes.emplace_back("T", std::to_string(rep.T));
  t.notes.emplace_back("E", num(cfg.E));
  t.notes.emplace_back("ser_stderr", num(rep.ser_stderr));
  t.notes.emplace_back("energy_stderr", num(rep.energy_stderr));
  t.notes.emplace_back("predicted_ser", num(rep.predicted_ser));
  t.notes.emplace_back("predicted_pupe", num(rep.predicted_pupe));
  t.notes.emplace_back("ser_within_bound", rep.ser_within_bound ? "1" : "0");
  json blocks = json::array();
  for (std::size_t b = 0; b < rep.blocks.size(); ++b) {
    const auto& blk = rep.blocks[b];
    t.notes.emplace_back("block", std::to_string(b) + " tau_se=" + num(blk.tau_se) + " residual=" +
                                      num(blk.residual_mean) + " stderr=" + num(blk.residual_stderr) +
                                      " theta=" + num(rep.thresholds[b]));
    blocks.push_back({{"tau_se", blk.tau_se},
                      {"residual_mean", blk.residual_mean},
                      {"residual_stderr", blk.residual_stderr},
                      {"theta", rep.thresholds[b]}});
  }
  t.extra["T"] = rep.T;
  t.extra["E"] = cfg.E;
  t.extra["ser_mean"] = rep.ser_mean;
  t.extra["ser_stderr"] = rep.ser_stderr;
  t.extra["predicted_ser"] = num_json(rep.predicted_ser);
  t.extra["predicted_pupe"] = num_json(rep.predicted_pupe);
  t.extra["ser_within_bound"] = rep.ser_within_bound;
  t.extra["blocks"] = blocks;
  t.extra["failed_trials"] = errors;
  if (rep.failed > 0) {
    std::cerr << "error: " << rep.failed << " of " << cfg.trials << " trials failed\n";
    status = kExitFailure;
  }
  return t;
}

// Reads key=value lines and turns them into flags placed before the
// explicit arguments, so explicit flags win under the take-last policy.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::vector<std::string> rest;
  std::string path;
  for (std::size_t i = 1; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a == "--config") {
      if (i + 1 >= args.size()) throw UsageError("--config needs a file path");
      path = args[++i];
    } else if (a.rfind("--config=", 0) == 0) {
      path = a.substr(9);
    } else {
      rest.push_back(a);
    }
  }
  std::vector<std::string> out{args.empty() ? "macbound" : args[0]};
  std::size_t cmd = 0;
  while (cmd < rest.size() && rest[cmd].rfind("-", 0) == 0) ++cmd;
  for (std::size_t i = 0; i <= cmd && i < rest.size(); ++i) out.push_back(rest[i]);
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot read config file '" + path + "'");
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos || line[first] == '#') continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        throw UsageError(path + ":" + std::to_string(lineno) + ": expected key=value");
      }
      auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
      };
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (key.empty()) throw UsageError(path + ":" + std::to_string(lineno) + ": empty key");
      if (value == "true") {
        out.push_back("--" + key);
      } else if (value != "false") {
        out.push_back("--" + key);
        out.push_back(value);
      }
    }
  }
  for (std::size_t i = cmd + 1; i < rest.size(); ++i) out.push_back(rest[i]);
  return out;
}

}  // namespace

std::vector<double> parse_grid(const std::string& spec) {
  std::vector<std::string> parts;
  std::stringstream ss(spec);
  for (std::string item; std::getline(ss, item, ':');) parts.push_back(item);
  if (parts.size() != 4) throw UsageError("grid '" + spec + "' must look like lo:hi:points:lin|log");
  double lo = 0.0;
  double hi = 0.0;
  int pts = 0;
  try {
    lo = std::stod(parts[0]);
    hi = std::stod(parts[1]);
    pts = std::stoi(parts[2]);
  } catch (const std::exception&) {
    throw UsageError("grid '" + spec + "' has a non-numeric field");
  }
  const std::string& scale = parts[3];
  if (scale != "lin" && scale != "log") throw UsageError("grid scale must be lin or log, got '" + scale + "'");
  if (pts < 1 || !(hi >= lo) || (pts > 1 && !(hi > lo))) {
    throw UsageError("grid '" + spec + "' needs lo < hi and points >= 1");
  }
  if (scale == "log" && !(lo > 0.0)) throw UsageError("log grid '" + spec + "' needs lo > 0");
  std::vector<double> g(pts);
  for (int i = 0; i < pts; ++i) {
    const double f = pts == 1 ? 0.0 : static_cast<double>(i) / (pts - 1);
    g[i] = scale == "lin" ? lo + f * (hi - lo) : std::exp(std::log(lo) + f * (std::log(hi) - std::log(lo)));
  }
  g.front() = lo;
  if (pts > 1) g.back() = hi;
  return g;
}

int parse_and_dispatch(const std::vector<std::string>& args) {
  CLI::App app{"Many-access channel PUPE bounds, state evolution and AMP simulation", "macbound"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast)->always_capture_default();
  app.require_subcommand(1);
  app.set_version_flag("--version", MACBOUND_VERSION);
  std::optional<unsigned> threads;
  app.add_option("--threads", threads, "worker thread cap (falls back to MACBOUND_THREADS)")
      ->check(CLI::NonNegativeNumber);

  Common common;
  ScalarArgs scalar_args;
  PotentialArgs potential_args;
  SeArgs se_args;
  BoundArgs bound_args;
  SimArgs sim_args;

  auto* scalar = app.add_subcommand("scalar", "scalar-channel quantities at one tau or on a grid");
  add_common(scalar, common, false);
  scalar->add_option("--tau", scalar_args.tau, "noise variance");
  scalar->add_option("--tau-grid", scalar_args.tau_grid, "lo:hi:points:lin|log");
  scalar->add_option("--op", scalar_args.op)
      ->check(CLI::IsMember({"mmse", "mi", "epsilon-star", "pi-star", "threshold", "psi", "bound"}));
  scalar->add_option("--theta", scalar_args.theta, "threshold for --op psi (default: optimal)");

  auto* potential = app.add_subcommand("potential", "potential landscape and its minimizers");
  add_common(potential, common, true);
  potential->add_option("--mu", potential_args.mu, "user density")->check(CLI::NonNegativeNumber);
  potential->add_option("--grid-points", potential_args.grid_points)->check(CLI::Range(16, 1 << 20));

  auto* se = app.add_subcommand("se", "coupled state evolution trajectory");
  add_common(se, common, true);
  se->add_option("--mu", se_args.mu, "user density")->check(CLI::NonNegativeNumber);
  add_coupling(se, se_args.coupling);
  se->add_option("--init", se_args.init)->check(CLI::IsMember({"infinite", "zero"}));
  se->add_option("--tol", se_args.tol)->check(CLI::PositiveNumber);
  se->add_option("--t-max", se_args.t_max)->check(CLI::PositiveNumber);

  auto* bound = app.add_subcommand("bound", "minimum Eb/N0 meeting a PUPE target");
  add_common(bound, common, false);
  bound->add_option("--mu", bound_args.mu, "single user density");
  bound->add_option("--mu-grid", bound_args.mu_grid, "lo:hi:points:lin|log");
  bound->add_option("--eps", bound_args.eps, "target PUPE");
  bound->add_option("--kind", bound_args.kind)->check(CLI::IsMember({"coupled", "uncoupled"}));
  bound->add_option("--lo-db", bound_args.lo_db);
  bound->add_option("--hi-db", bound_args.hi_db);
  bound->add_flag("--no-warm-start", bound_args.no_warm_start);

  auto* simulate = app.add_subcommand("simulate", "finite-n AMP Monte Carlo");
  add_common(simulate, common, true);
  simulate->add_option("--n", sim_args.n, "blocklength")->check(CLI::PositiveNumber);
  simulate->add_option("--K", sim_args.K, "number of users")->check(CLI::PositiveNumber);
  simulate->add_option("--T", sim_args.T, "AMP iterations (0: until SE settles)")->check(CLI::NonNegativeNumber);
  simulate->add_option("--trials", sim_args.trials)->check(CLI::PositiveNumber);
  simulate->add_option("--seed", sim_args.seed);
  add_coupling(simulate, sim_args.coupling);
  simulate->add_option("--init", sim_args.init)->check(CLI::IsMember({"infinite", "zero"}));
  simulate->add_option("--threshold-scale", sim_args.threshold_scale)->check(CLI::PositiveNumber);

  for (auto* sub : {scalar, potential, se, bound, simulate}) {
    sub->get_option("--channel")->required();
    sub->get_option("--k")->required();
  }

  try {
    std::vector<std::string> argv = expand_config(args);
    std::vector<const char*> ptrs;
    for (const auto& s : argv) ptrs.push_back(s.c_str());
    app.parse(static_cast<int>(ptrs.size()), ptrs.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  }

  if (!threads) {
    if (const char* env = std::getenv("MACBOUND_THREADS")) {
      try {
        threads = static_cast<unsigned>(std::stoul(env));
      } catch (const std::exception&) {
        std::cerr << "usage error: MACBOUND_THREADS='" << env << "' is not a non-negative integer\n";
        return kExitUsage;
      }
    }
  }
  if (threads) set_worker_limit(*threads);

  int status = kExitOk;
  const CLI::App* chosen = app.get_subcommands().front();
  try {
    Table t;
    if (chosen == scalar) {
      t = run_scalar(common, scalar_args, status);
    } else if (chosen == potential) {
      t = run_potential(common, potential_args);
    } else if (chosen == se) {
      t = run_se(common, se_args);
    } else if (chosen == bound) {
      t = run_bound(common, bound_args);
    } else {
      t = run_simulate(common, sim_args, status);
    }
    write_atomic(common.output, render(chosen, common, t));
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n' << chosen->help();
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return status;
}

}  // namespace macbound
