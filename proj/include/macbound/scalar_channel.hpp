#pragma once

#include <complex>
#include <memory>
#include <string>
#include <string_view>

namespace macbound {

enum class ChannelKind { Awgn, Qsf };

std::string_view to_string(ChannelKind kind);
ChannelKind parse_channel_kind(std::string_view text);

/// Channel tag plus payload size. M = 2^k is never formed as an integer;
/// everything is expressed through ln M and ln(M-1).
class ChannelModel {
 public:
  ChannelModel(ChannelKind kind, int k);

  ChannelKind kind() const { return kind_; }
  int k() const { return k_; }
  bool complex_valued() const { return kind_ == ChannelKind::Qsf; }

  double log_m() const { return log_m_; }
  /// ln(M-1), exact to rounding for every k >= 1.
  double log_m_minus_1() const { return log_m_minus_1_; }
  /// Prior activity 1/M and ln(1 - 1/M).
  double prior_active() const { return prior_active_; }
  double log_prior_inactive() const { return log_prior_inactive_; }
  /// M as a double (finite for k <= 1023).
  double m() const { return m_; }
  /// M * Var(X): 1 - 1/M for AWGN, 1 for QSF.
  double scaled_prior_variance() const;
  /// 1/2 for the real channel, 1 for the complex one.
  double dimension_factor() const { return complex_valued() ? 1.0 : 0.5; }

  friend bool operator==(const ChannelModel&, const ChannelModel&) = default;

 private:
  ChannelKind kind_;
  int k_;
  double log_m_;
  double log_m_minus_1_;
  double prior_active_;
  double log_prior_inactive_;
  double m_;
};

/// Observation of the scalar channel V = X + sigma W, with tau = sigma^2.
struct ScalarObservation {
  std::complex<double> value;
  double tau;
};

// --- Posterior quantities -------------------------------------------------

/// Posterior log-odds that X is active given v (AWGN) or |v|^2 (QSF).
double posterior_log_odds(const ChannelModel& ch, const ScalarObservation& obs);

/// Posterior mean E[X | V = v]. AWGN returns a real value (imaginary part
/// zero); QSF returns the complex shrinkage estimate.
std::complex<double> denoise(const ChannelModel& ch, const ScalarObservation& obs);
double denoise_real(const ChannelModel& ch, double v, double tau);
std::complex<double> denoise_complex(const ChannelModel& ch, std::complex<double> v, double tau);

// --- Integrated quantities (direct adaptive quadrature) ---------------------

/// M * mmse(tau), in [0, M Var(X)].
double mmse_scaled(const ChannelModel& ch, double tau);

/// M * I(X; V_tau) in nats.
double mutual_info_scaled(const ChannelModel& ch, double tau);

// --- Support recovery ---------------------------------------------------------

/// Probability that the threshold test on V (AWGN) or |V|^2 (QSF) misreads
/// the activity of X.
double psi_support_error(const ChannelModel& ch, double tau, double theta);

/// M * psi, evaluated without forming the tiny prior explicitly.
double psi_support_error_scaled(const ChannelModel& ch, double tau, double theta);

/// Threshold minimizing psi: 1/2 + tau ln(M-1) for AWGN,
/// tau (1+tau) ln((M-1)(1+1/tau)) for QSF.
double optimal_threshold(const ChannelModel& ch, double tau);

/// 1 - (1/(1+tau)) ((M-1)(1+1/tau))^(-tau), clamped to [0, 1].
double pi_star(double tau, const ChannelModel& ch);

struct EpsilonStar {
  double epsilon;      ///< eps*
  double log_epsilon;  ///< ln eps*, finite even when eps* underflows
  double log_m;        ///< ln M of the channel it was solved for
  double epsilon_tilde() const;  ///< 2 eps* / M
};

/// Solves 1/sqrt(tau) = Qinv(eps) + Qinv(eps/(M-1)) for eps in (0, 1/2].
/// Throws std::domain_error when no solution exists (tau too large).
EpsilonStar epsilon_star(double tau, const ChannelModel& ch);

/// 2 eps*, with the infeasible (large tau) case mapped to the trivial 1.
double epsilon_star_bound(double tau, const ChannelModel& ch);

// --- Memoized curves ----------------------------------------------------------

/// Tabulated M*mmse and M*I over ln tau, starting from a uniform grid and
/// bisecting wherever a midpoint disagrees with the interpolant by more than
/// 1e-11. Direct evaluation outside [kTauMin, kTauMax].
class ScalarCurves {
 public:
  static constexpr double kTauMin = 1e-12;
  static constexpr double kTauMax = 1e8;
  static constexpr int kDefaultPoints = 2001;

  explicit ScalarCurves(const ChannelModel& ch, int points = kDefaultPoints);
  ~ScalarCurves();
  ScalarCurves(const ScalarCurves&) = delete;
  ScalarCurves& operator=(const ScalarCurves&) = delete;

  /// Process-wide cache keyed by (kind, k).
  static std::shared_ptr<const ScalarCurves> shared(const ChannelModel& ch);

  const ChannelModel& channel() const { return ch_; }
  double mmse_scaled(double tau) const;
  double mutual_info_scaled(double tau) const;
  std::size_t nodes() const;

 private:
  struct Impl;
  ChannelModel ch_;
  std::unique_ptr<Impl> impl_;
};

}  // namespace macbound
