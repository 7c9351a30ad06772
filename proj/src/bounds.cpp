#include "macbound/bounds.hpp"

#include "macbound/potential.hpp"
#include "macbound/qfunc.hpp"

#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace macbound {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

// Points lo + i * step on the scan lattice, with the last one pinned to hi.
struct Lattice {
  double lo;
  double hi;
  double step;
  long last() const { return static_cast<long>(std::ceil((hi - lo) / step - 1e-9)); }
  double at(long i) const { return i >= last() ? hi : lo + static_cast<double>(i) * step; }
  long floor_index(double x) const {
    return std::clamp(static_cast<long>(std::floor((x - lo) / step + 1e-9)), 0L, last());
  }
};

}  // namespace

std::string_view to_string(BoundKind kind) { return kind == BoundKind::Coupled ? "coupled" : "uncoupled"; }

std::string_view to_string(PhaseFlag flag) {
  switch (flag) {
    case PhaseFlag::Smooth: return "smooth";
    case PhaseFlag::Jump: return "jump";
    case PhaseFlag::Tie: return "tie";
    case PhaseFlag::Failed: return "failed";
  }
  return "failed";
}

double energy_from_ebn0_db(const ChannelModel& ch, double ebn0_db) {
  const double per_bit = std::pow(10.0, ebn0_db / 10.0);
  return (ch.complex_valued() ? 1.0 : 2.0) * per_bit * ch.k();
}

double ebn0_db_from_energy(const ChannelModel& ch, double E) {
  return 10.0 * std::log10(E / ((ch.complex_valued() ? 1.0 : 2.0) * ch.k()));
}

BoundValue pupe_bound(const ChannelModel& ch, double mu, double E, BoundKind kind) {
  const SystemParams p{mu, E, ch};
  BoundValue out{};
  if (kind == BoundKind::Coupled) {
    const auto land = global_minimizer(p);
    out.tau = land.global_argmin_max;
    out.tie = land.tie;
  } else {
    out.tau = uncoupled_fixed_points(p).back();
  }
  out.pupe = ch.kind() == ChannelKind::Qsf ? pi_star(out.tau, ch) : epsilon_star_bound(out.tau, ch);
  return out;
}

double single_user_ebn0_db(const ChannelModel& ch, double eps) {
  if (!(eps > 0.0 && eps < 1.0)) {
    throw std::invalid_argument("single_user_ebn0_db: eps must lie in (0, 1)");
  }
  if (ch.kind() == ChannelKind::Awgn) {
    const double log_half_eps = std::log(eps / 2.0);
    const double root_e =
        q_tail_inverse_log(log_half_eps) + q_tail_inverse_log(log_half_eps - ch.log_m_minus_1());
    return ebn0_db_from_energy(ch, root_e * root_e);
  }
  auto f = [&](double log_e) { return pi_star(std::exp(-log_e), ch) - eps; };
  std::uintmax_t iters = 300;
  auto tol = [](double a, double b) { return std::abs(b - a) <= 1e-14 * std::max(1.0, std::abs(a)); };
  const auto [a, b] = boost::math::tools::toms748_solve(f, std::log(1e-6), std::log(1e30), tol, iters);
  return ebn0_db_from_energy(ch, std::exp(0.5 * (a + b)));
}

CurveRecord min_ebn0(const BoundQuery& q, double start_db) {
  if (!(q.target_eps > 0.0 && q.target_eps < 1.0)) {
    throw std::invalid_argument("min_ebn0: target_eps must lie in (0, 1)");
  }
  if (!(q.hi_db > q.lo_db) || !(q.scan_step_db > 0.0) || !(q.bisect_tol_db > 0.0)) {
    throw std::invalid_argument("min_ebn0: empty window or nonpositive step");
  }
  CurveRecord rec;
  rec.mu = q.mu;
  rec.ebn0_db = rec.E = rec.tau_star = rec.pupe = kNaN;

  auto eval = [&](double db) { return pupe_bound(q.ch, q.mu, energy_from_ebn0_db(q.ch, db), q.kind); };
  auto feasible = [&](double db) { return eval(db).pupe <= q.target_eps; };

  const Lattice grid{q.lo_db, q.hi_db, q.scan_step_db};
  long i = grid.floor_index(std::clamp(start_db, q.lo_db, q.hi_db));
  long below;  // infeasible lattice index
  long above;  // feasible lattice index
  if (feasible(grid.at(i))) {
    above = i;
    below = i - 1;
    while (below >= 0 && feasible(grid.at(below))) above = below--;
    if (below < 0) {
      rec.message = "target already met at the window's lower end " + fmt(q.lo_db) + " dB";
      return rec;
    }
  } else {
    long reach = 1;
    long probe = i;
    for (;;) {
      if (probe == grid.last()) {
        rec.message = "target not met at the window's upper end " + fmt(q.hi_db) + " dB";
        return rec;
      }
      const long next = std::min(probe + reach, grid.last());
      if (feasible(grid.at(next))) {
        above = next;
        break;
      }
      probe = next;
      reach *= 2;
    }
    // Descending scan over the gallop's last gap.
    below = above - 1;
    while (below > probe && feasible(grid.at(below))) above = below--;
  }

  double a = grid.at(below);
  double b = grid.at(above);
  while (b - a > q.bisect_tol_db) {
    const double m = 0.5 * (a + b);
    if (feasible(m)) {
      b = m;
    } else {
      a = m;
    }
  }
  const BoundValue at_b = eval(b);
  const BoundValue at_a = eval(grid.at(below));
  rec.ebn0_db = b;
  rec.E = energy_from_ebn0_db(q.ch, b);
  rec.tau_star = at_b.tau;
  rec.pupe = at_b.pupe;
  if (at_b.tie) {
    rec.flag = PhaseFlag::Tie;
  } else if (at_a.tau > 1.5 * at_b.tau) {
    rec.flag = PhaseFlag::Jump;
  } else {
    rec.flag = PhaseFlag::Smooth;
  }
  return rec;
}

CurveRecord min_ebn0(const BoundQuery& q) { return min_ebn0(q, q.lo_db); }

std::vector<CurveRecord> sweep_curve(const ChannelModel& ch, const std::vector<double>& mu_grid, double eps,
                                     const SweepOptions& opt) {
  if (!std::is_sorted(mu_grid.begin(), mu_grid.end())) {
    throw std::invalid_argument("sweep_curve: mu grid must be sorted ascending");
  }
  std::vector<CurveRecord> out;
  out.reserve(mu_grid.size());
  double start = opt.lo_db;
  for (double mu : mu_grid) {
    BoundQuery q{ch, mu, eps, opt.lo_db, opt.hi_db, opt.kind};
    CurveRecord rec;
    try {
      rec = min_ebn0(q, opt.warm_start ? start : opt.lo_db);
    } catch (const std::exception& e) {
      rec.mu = mu;
      rec.ebn0_db = rec.E = rec.tau_star = rec.pupe = kNaN;
      rec.flag = PhaseFlag::Failed;
      rec.message = e.what();
    }
    if (rec.ok() && opt.warm_start) start = rec.ebn0_db;
    out.push_back(std::move(rec));
  }
  return out;
}

void write_curve_csv(std::ostream& os, const std::vector<CurveRecord>& rows) {
  os << "mu,ebn0_db,E,tau_star,pupe,phase_flag\n";
  for (const auto& r : rows) {
    os << fmt(r.mu) << ',' << fmt(r.ebn0_db) << ',' << fmt(r.E) << ',' << fmt(r.tau_star) << ',' << fmt(r.pupe)
       << ',' << to_string(r.flag) << '\n';
  }
}

}  // namespace macbound
