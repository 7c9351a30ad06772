#include "macbound/state_evolution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace macbound {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Fills gamma, phi and tau from psi. An infinite psi_c feeding row r makes
// phi_r infinite; 1/phi_r = 0 then drops that row from tau_c.
void complete_state(const SeProblem& prob, SeState& s) {
  const BaseMatrix& B = prob.base;
  const double mu_eff = prob.effective_mu();
  const double inv_e = 1.0 / prob.E;
  s.gamma_scaled.assign(B.rows(), 0.0);
  s.phi.assign(B.rows(), 0.0);
  for (int r = 0; r < B.rows(); ++r) {
    double g = 0.0;
    for (int c = 0; c < B.cols(); ++c) {
      const double w = B(r, c);
      if (w > 0.0) g += w * s.psi[c];
    }
    s.gamma_scaled[r] = g;
    s.phi[r] = mu_eff == 0.0 ? inv_e : inv_e + mu_eff * g;
  }
  s.tau.assign(B.cols(), 0.0);
  for (int c = 0; c < B.cols(); ++c) {
    double inv = 0.0;
    for (int r = 0; r < B.rows(); ++r) {
      const double w = B(r, c);
      if (w > 0.0) inv += w / s.phi[r];
    }
    s.tau[c] = 1.0 / inv;
  }
}

}  // namespace

BaseMatrix::BaseMatrix(int omega, int Lambda, double rho) : omega_(omega), Lambda_(Lambda), rho_(rho) {
  if (omega < 1) {
    throw std::invalid_argument("base matrix: omega must be >= 1, got " + std::to_string(omega));
  }
  if (Lambda < 2 * omega - 1) {
    throw std::invalid_argument("base matrix: Lambda must be >= 2 omega - 1 = " + std::to_string(2 * omega - 1) +
                                ", got " + std::to_string(Lambda));
  }
  if (!(rho >= 0.0 && rho < 1.0)) {
    throw std::invalid_argument("base matrix: rho must lie in [0, 1)");
  }
  if (rho > 0.0 && Lambda == 1) {
    throw std::invalid_argument("base matrix: rho > 0 needs Lambda >= 2");
  }
  rows_ = Lambda + omega - 1;
  cols_ = Lambda;
  const double band = (1.0 - rho) / omega;
  const double off = Lambda > 1 ? rho / (Lambda - 1) : 0.0;
  entries_.assign(static_cast<std::size_t>(rows_) * cols_, off);
  for (int c = 0; c < cols_; ++c) {
    for (int r = c; r <= c + omega - 1; ++r) {
      entries_[static_cast<std::size_t>(r) * cols_ + c] = band;
    }
  }
}

BaseMatrix BaseMatrix::uncoupled() { return BaseMatrix(); }

double SeResult::max_tau() const {
  const auto& p = profile();
  return *std::max_element(p.begin(), p.end());
}

SeState se_initial_state(const SeProblem& prob, SeInit init) {
  if (!(prob.mu >= 0.0) || !(prob.E > 0.0)) {
    throw std::invalid_argument("state evolution: need mu >= 0 and E > 0");
  }
  SeState s;
  s.t = 0;
  s.psi.assign(prob.base.cols(), init == SeInit::Infinite ? kInf : 1.0);
  complete_state(prob, s);
  return s;
}

SeState se_step(const SeProblem& prob, const SeState& state) {
  const auto curves = ScalarCurves::shared(prob.ch);
  SeState next;
  next.t = state.t + 1;
  next.psi.resize(state.tau.size());
  for (std::size_t c = 0; c < state.tau.size(); ++c) {
    next.psi[c] = curves->mmse_scaled(state.tau[c]);
  }
  complete_state(prob, next);
  return next;
}

SeResult se_run(const SeProblem& prob, const SeRunOptions& opt) {
  if (!(opt.tol > 0.0) || opt.t_max < 1) {
    throw std::invalid_argument("se_run: need tol > 0 and t_max >= 1");
  }
  SeResult out;
  out.trajectory.push_back(se_initial_state(prob, opt.init));
  for (int t = 1; t <= opt.t_max; ++t) {
    SeState next = se_step(prob, out.trajectory.back());
    const SeState& prev = out.trajectory.back();
    double worst = 0.0;
    for (std::size_t c = 0; c < next.tau.size(); ++c) {
      const double now = next.tau[c];
      const double before = prev.tau[c];
      if (now > before * (1.0 + opt.monotone_slack)) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "state evolution lost monotonicity at t = " << t << ", block " << c << ": " << before << " -> "
            << now;
        throw std::logic_error(msg.str());
      }
      worst = std::max(worst, std::abs(now - before) / now);
    }
    out.trajectory.push_back(std::move(next));
    if (worst <= opt.tol) {
      out.converged = true;
      break;
    }
  }
  return out;
}

PupePrediction coupled_pupe_prediction(const ChannelModel& ch, const std::vector<double>& profile) {
  if (profile.empty()) {
    throw std::invalid_argument("coupled_pupe_prediction: empty profile");
  }
  PupePrediction out;
  double sum = 0.0;
  for (double tau : profile) {
    const double e = ch.kind() == ChannelKind::Qsf ? pi_star(tau, ch) : epsilon_star_bound(tau, ch);
    out.per_block.push_back(e);
    out.thresholds.push_back(optimal_threshold(ch, tau));
    sum += e;
  }
  out.pupe = sum / static_cast<double>(profile.size());
  return out;
}

double section_error_prediction(const ChannelModel& ch, const std::vector<double>& profile,
                                const std::vector<double>& thresholds) {
  if (profile.size() != thresholds.size() || profile.empty()) {
    throw std::invalid_argument("section_error_prediction: profile and thresholds differ in length");
  }
  double sum = 0.0;
  for (std::size_t c = 0; c < profile.size(); ++c) {
    sum += psi_support_error_scaled(ch, profile[c], thresholds[c]);
  }
  return sum / static_cast<double>(profile.size());
}

}  // namespace macbound
