#pragma once

#include "macbound/scalar_channel.hpp"

#include <vector>

namespace macbound {

/// (omega, Lambda, rho) base matrix: R = Lambda + omega - 1 rows, C = Lambda
/// columns, band value (1 - rho)/omega on c <= r <= c + omega - 1 and
/// rho/(Lambda - 1) elsewhere. Columns sum to one.
class BaseMatrix {
 public:
  BaseMatrix(int omega, int Lambda, double rho);

  /// Single-entry matrix describing an uncoupled i.i.d. design.
  static BaseMatrix uncoupled();

  int omega() const { return omega_; }
  int Lambda() const { return Lambda_; }
  double rho() const { return rho_; }
  int rows() const { return rows_; }
  int cols() const { return cols_; }
  double operator()(int r, int c) const { return entries_[static_cast<std::size_t>(r) * cols_ + c]; }
  /// R / C, the factor turning mu into the effective density.
  double rate_penalty() const { return static_cast<double>(rows_) / cols_; }

 private:
  BaseMatrix() = default;
  int omega_ = 1;
  int Lambda_ = 1;
  double rho_ = 0.0;
  int rows_ = 1;
  int cols_ = 1;
  std::vector<double> entries_{1.0};
};

enum class SeInit {
  Infinite,  ///< psi^(0) = infinity
  ZeroEstimate,  ///< M psi^(0) = M E|X|^2 = 1, matching an all-zero first estimate
};

struct SeState {
  int t = 0;
  std::vector<double> psi;           ///< M psi_c
  std::vector<double> gamma_scaled;  ///< M gamma_r
  std::vector<double> phi;           ///< phi_r
  std::vector<double> tau;           ///< tau_c
};

struct SeProblem {
  ChannelModel ch;
  BaseMatrix base;
  double mu;
  double E;
  double effective_mu() const { return base.rate_penalty() * mu; }
};

SeState se_initial_state(const SeProblem& prob, SeInit init);

/// One iteration: psi' = Mmmse(tau), then gamma, phi and tau from psi'.
SeState se_step(const SeProblem& prob, const SeState& state);

struct SeRunOptions {
  double tol = 1e-10;
  int t_max = 10000;
  SeInit init = SeInit::Infinite;
  double monotone_slack = 1e-12;
};

struct SeResult {
  std::vector<SeState> trajectory;  ///< trajectory[t] is the state at iteration t
  bool converged = false;
  const SeState& final_state() const { return trajectory.back(); }
  const std::vector<double>& profile() const { return final_state().tau; }
  double max_tau() const;
};

/// Iterates to max_c |tau_c^(t) - tau_c^(t-1)| <= tol tau_c^(t). Throws
/// std::logic_error if some tau_c increases by more than the slack.
SeResult se_run(const SeProblem& prob, const SeRunOptions& opt = {});

struct PupePrediction {
  double pupe;
  std::vector<double> per_block;   ///< per-block scaled error at the optimal threshold
  std::vector<double> thresholds;  ///< theta_c*
};

/// QSF: average of pi*(tau_c); AWGN: average of 2 eps*(tau_c).
PupePrediction coupled_pupe_prediction(const ChannelModel& ch, const std::vector<double>& profile);

/// Average of M psi(tau_c, theta_c) for the given thresholds.
double section_error_prediction(const ChannelModel& ch, const std::vector<double>& profile,
                                const std::vector<double>& thresholds);

}  // namespace macbound
