#pragma once

#include "macbound/scalar_channel.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace macbound {

/// Which effective noise level the bound is evaluated at.
enum class BoundKind {
  Coupled,    ///< largest global minimizer of the potential
  Uncoupled,  ///< largest fixed point of uncoupled state evolution
};

std::string_view to_string(BoundKind kind);

/// E = 2 Eb/N0 k for the real channel, Eb/N0 k for the complex one.
double energy_from_ebn0_db(const ChannelModel& ch, double ebn0_db);
double ebn0_db_from_energy(const ChannelModel& ch, double E);

struct BoundValue {
  double pupe;
  double tau;         ///< noise level the bound was evaluated at
  bool tie = false;   ///< potential minima tied at this point
};

/// QSF: pi*(tau); AWGN: 2 eps*(tau) clamped to 1.
BoundValue pupe_bound(const ChannelModel& ch, double mu, double E, BoundKind kind = BoundKind::Coupled);

/// Eb/N0 (dB) at which a single user meets the target.
double single_user_ebn0_db(const ChannelModel& ch, double eps);

struct BoundQuery {
  ChannelModel ch;
  double mu;
  double target_eps;
  double lo_db = -5.0;
  double hi_db = 100.0;
  BoundKind kind = BoundKind::Coupled;
  double scan_step_db = 0.01;
  double bisect_tol_db = 1e-4;
};

enum class PhaseFlag {
  Smooth,  ///< bound continuous across the final bracket
  Jump,    ///< noise level jumps across the final bracket
  Tie,     ///< potential minima tie at the solution
  Failed,  ///< no solution inside the window
};

std::string_view to_string(PhaseFlag flag);

struct CurveRecord {
  double mu = 0.0;
  double ebn0_db = 0.0;
  double E = 0.0;
  double tau_star = 0.0;
  double pupe = 0.0;
  PhaseFlag flag = PhaseFlag::Failed;
  std::string message;
  bool ok() const { return flag != PhaseFlag::Failed; }
};

/// Smallest Eb/N0 in the window meeting the target. A descending scan at
/// scan_step_db brackets the transition, bisection finishes it. With a warm
/// start, the scan begins from start_db and gallops upward instead of
/// sweeping the whole window.
CurveRecord min_ebn0(const BoundQuery& q, double start_db);
CurveRecord min_ebn0(const BoundQuery& q);

struct SweepOptions {
  double lo_db = -5.0;
  double hi_db = 100.0;
  BoundKind kind = BoundKind::Coupled;
  bool warm_start = true;
};

std::vector<CurveRecord> sweep_curve(const ChannelModel& ch, const std::vector<double>& mu_grid, double eps,
                                     const SweepOptions& opt = {});

/// Writes the header row and one row per record.
void write_curve_csv(std::ostream& os, const std::vector<CurveRecord>& rows);

}  // namespace macbound
