#include "macbound/scalar_channel.hpp"

#include "macbound/parallel.hpp"
#include "macbound/qfunc.hpp"
#include "macbound/quadrature.hpp"

#include <boost/math/interpolators/cubic_hermite.hpp>
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace macbound {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLog2 = std::numbers::ln2;
// Exponent below which a density is treated as zero: exp(-745) underflows.
constexpr double kLogUnderflow = 745.0;

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double log_sigmoid(double x) { return -softplus(-x); }

double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double log_add_exp(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(-std::abs(a - b)));
}

// e^x - 1 - x without cancellation near zero.
double excess_exp(double x) {
  if (std::abs(x) < 1e-2) {
    const double x2 = x * x;
    return x2 * (0.5 + x * (1.0 / 6 + x * (1.0 / 24 + x * (1.0 / 120 + x * (1.0 / 720 + x / 5040)))));
  }
  return std::expm1(x) - x;
}

// (e^x - 1 - x) * exp(log_weight), safe when e^x alone would overflow.
double weighted_excess(double x, double log_weight) {
  if (log_weight + std::max(x, 0.0) < -kLogUnderflow - 60.0) {
    return 0.0;
  }
  if (x > 30.0) {
    return std::exp(x + log_weight) - (1.0 + x) * std::exp(log_weight);
  }
  return excess_exp(x) * std::exp(log_weight);
}

// ln(wa + wb e^y) with wa + wb = 1, accurate when the result is near zero.
double log_one_plus(double wb, double log_wa, double log_wb, double y) {
  if (y < 700.0) {
    const double t = wb * std::expm1(y);
    if (std::abs(t) <= 0.5) {
      return std::log1p(t);
    }
  }
  return log_add_exp(log_wa, log_wb + y);
}

// ln f/f0 and ln f/f1 for the prior mixture f = w0 f0 + w1 f1, given the
// likelihood ratio llr = ln f1/f0. Both are formed directly so neither
// loses precision when |llr| is huge.
struct MixtureLogs {
  double vs_inactive;
  double vs_active;
};

MixtureLogs mixture_logs(const ChannelModel& ch, double llr) {
  const double w1 = ch.prior_active();
  const double log_w1 = -ch.log_m();
  const double log_w0 = ch.log_prior_inactive();
  return {log_one_plus(w1, log_w0, log_w1, llr), log_one_plus(1.0 - w1, log_w1, log_w0, -llr)};
}

// Entropy of Bernoulli(sigmoid(a)) in nats.
double binary_entropy_logit(double a) {
  const double p1 = sigmoid(a);
  const double p0 = sigmoid(-a);
  return -(p1 * log_sigmoid(a) + p0 * log_sigmoid(-a));
}

// M H(S) for S ~ Bernoulli(1/M).
double scaled_activity_entropy(const ChannelModel& ch) {
  return ch.log_m() - std::exp(ch.log_m_minus_1()) * ch.log_prior_inactive();
}

// Picks between M H(S) - M H(S|V) and the divergence form. The first is
// exact when the posterior is nearly decided, the second when V says little.
template <class EntropyForm, class DivergenceForm>
double scaled_activity_information(const ChannelModel& ch, EntropyForm residual, DivergenceForm divergence) {
  const double h = scaled_activity_entropy(ch);
  const double r = residual();
  if (r <= 0.5 * h) {
    return h - r;
  }
  return divergence();
}

void check_tau(double tau, const char* where) {
  if (!(tau > 0.0)) {
    throw std::domain_error(std::string(where) + ": tau must be positive, got " + std::to_string(tau));
  }
}

// --- AWGN (real, Bernoulli(1/M) on {0,1}) ---------------------------------

double awgn_llr(double v, double tau) { return (2.0 * v - 1.0) / (2.0 * tau); }

std::vector<double> awgn_breakpoints(const ChannelModel& ch, double tau) {
  const double sd = std::sqrt(tau);
  const double reach = std::sqrt(2.0 * (ch.log_m_minus_1() + kLogUnderflow));
  const double lo = -reach * sd;
  const double hi = 1.0 + reach * sd;
  std::vector<double> pts{lo, hi};
  for (double centre : {0.0, 1.0}) {
    for (double m : {0.0, -2.0, 2.0, -8.0, 8.0}) {
      pts.push_back(centre + m * sd);
    }
  }
  const double cross = optimal_threshold(ch, tau);
  for (double m : {0.0, -1.0, 1.0, -6.0, 6.0, -30.0, 30.0}) {
    pts.push_back(cross + m * tau);
  }
  std::erase_if(pts, [&](double p) { return !(p >= lo && p <= hi); });
  return pts;
}

double awgn_log_f0(double v, double tau) {
  return log_normal_pdf(v / std::sqrt(tau)) - 0.5 * std::log(tau);
}

double awgn_log_f1(double v, double tau) {
  return log_normal_pdf((v - 1.0) / std::sqrt(tau)) - 0.5 * std::log(tau);
}

double awgn_mmse_scaled(const ChannelModel& ch, double tau) {
  const double lm1 = ch.log_m_minus_1();
  // M mmse = \int p1 p0 * M f(v) dv, with M f = (M-1) f0 + f1.
  auto integrand = [&](double v) {
    const double a = awgn_llr(v, tau) - lm1;
    const double log_mf = log_add_exp(lm1 + awgn_log_f0(v, tau), awgn_log_f1(v, tau));
    return std::exp(log_sigmoid(a) + log_sigmoid(-a) + log_mf);
  };
  const auto pts = awgn_breakpoints(ch, tau);
  return integrate_adaptive(integrand, pts).value;
}

double awgn_mutual_info_scaled(const ChannelModel& ch, double tau) {
  const double lm1 = ch.log_m_minus_1();
  // M I = (M-1) D(f0 || f) + D(f1 || f), each written with a nonnegative
  // integrand e^x - 1 - x (x = ln f/f0 resp. ln f/f1).
  auto integrand = [&](double v) {
    const auto g = mixture_logs(ch, awgn_llr(v, tau));
    return weighted_excess(g.vs_inactive, lm1 + awgn_log_f0(v, tau)) +
           weighted_excess(g.vs_active, awgn_log_f1(v, tau));
  };
  auto residual = [&](double v) {
    const double a = awgn_llr(v, tau) - lm1;
    const double log_mf = log_add_exp(lm1 + awgn_log_f0(v, tau), awgn_log_f1(v, tau));
    return std::exp(log_mf) * binary_entropy_logit(a);
  };
  const auto pts = awgn_breakpoints(ch, tau);
  return scaled_activity_information(
      ch, [&] { return integrate_adaptive(residual, pts).value; },
      [&] { return integrate_adaptive(integrand, pts).value; });
}

// --- QSF (complex Bernoulli-Gaussian(1, 1/M)), integrated over s = |v|^2 ---

// ln(tau / (1 + tau))
double qsf_log_ratio(double tau) { return -std::log1p(1.0 / tau); }

double qsf_llr(double s, double tau) { return qsf_log_ratio(tau) + s / (tau * (1.0 + tau)); }

double qsf_log_f0(double s, double tau) { return -s / tau - std::log(tau); }

double qsf_log_f1(double s, double tau) { return -s / (1.0 + tau) - std::log1p(tau); }

std::vector<double> qsf_breakpoints(const ChannelModel& ch, double tau) {
  const double hi = (1.0 + tau) * (ch.log_m_minus_1() + kLogUnderflow);
  std::vector<double> pts{0.0, hi};
  for (double scale : {tau, 1.0 + tau}) {
    for (double m : {1.0, 4.0, 16.0, 64.0}) {
      pts.push_back(m * scale);
    }
  }
  const double cross = optimal_threshold(ch, tau);
  const double width = tau * (1.0 + tau);
  for (double m : {0.0, -1.0, 1.0, -6.0, 6.0, -30.0, 30.0}) {
    pts.push_back(cross + m * width);
  }
  std::erase_if(pts, [&](double p) { return !(p >= 0.0 && p <= hi); });
  return pts;
}

double qsf_mmse_scaled(const ChannelModel& ch, double tau) {
  const double lm1 = ch.log_m_minus_1();
  const double shrink = 1.0 / (1.0 + 1.0 / tau);  // tau / (1 + tau)
  const double inv_sq = 1.0 / ((1.0 + tau) * (1.0 + tau));
  // E[Var(X|V)] = E[pi1 tau/(1+tau) + pi1 pi0 s/(1+tau)^2]
  auto integrand = [&](double s) {
    const double a = qsf_llr(s, tau) - lm1;
    const double log_mf = log_add_exp(lm1 + qsf_log_f0(s, tau), qsf_log_f1(s, tau));
    const double inner = shrink + sigmoid(-a) * s * inv_sq;
    return std::exp(log_sigmoid(a) + std::log(inner) + log_mf);
  };
  const auto pts = qsf_breakpoints(ch, tau);
  return integrate_adaptive(integrand, pts).value;
}

double qsf_mutual_info_scaled(const ChannelModel& ch, double tau) {
  const double lm1 = ch.log_m_minus_1();
  auto integrand = [&](double s) {
    const auto g = mixture_logs(ch, qsf_llr(s, tau));
    return weighted_excess(g.vs_inactive, lm1 + qsf_log_f0(s, tau)) +
           weighted_excess(g.vs_active, qsf_log_f1(s, tau));
  };
  auto residual = [&](double s) {
    const double a = qsf_llr(s, tau) - lm1;
    const double log_mf = log_add_exp(lm1 + qsf_log_f0(s, tau), qsf_log_f1(s, tau));
    return std::exp(log_mf) * binary_entropy_logit(a);
  };
  const auto pts = qsf_breakpoints(ch, tau);
  // M I(S; |V|^2) plus the Gaussian part of an active section, M (1/M) ln(1 + 1/tau).
  const double support = scaled_activity_information(
      ch, [&] { return integrate_adaptive(residual, pts).value; },
      [&] { return integrate_adaptive(integrand, pts).value; });
  return support + std::log1p(1.0 / tau);
}

}  // namespace

std::string_view to_string(ChannelKind kind) { return kind == ChannelKind::Awgn ? "awgn" : "qsf"; }

ChannelKind parse_channel_kind(std::string_view text) {
  if (text == "awgn" || text == "AWGN") return ChannelKind::Awgn;
  if (text == "qsf" || text == "QSF") return ChannelKind::Qsf;
  throw std::invalid_argument("unknown channel '" + std::string(text) + "' (expected awgn or qsf)");
}

ChannelModel::ChannelModel(ChannelKind kind, int k) : kind_(kind), k_(k) {
  if (k < 1 || k > 1000) {
    throw std::invalid_argument("payload k must lie in [1, 1000], got " + std::to_string(k));
  }
  log_m_ = k * kLog2;
  prior_active_ = std::ldexp(1.0, -k);
  log_m_minus_1_ = log_m_ + std::log1p(-prior_active_);
  log_prior_inactive_ = std::log1p(-prior_active_);
  m_ = std::ldexp(1.0, k);
}

double ChannelModel::scaled_prior_variance() const {
  return kind_ == ChannelKind::Awgn ? 1.0 - prior_active_ : 1.0;
}

double posterior_log_odds(const ChannelModel& ch, const ScalarObservation& obs) {
  check_tau(obs.tau, "posterior_log_odds");
  if (ch.kind() == ChannelKind::Awgn) {
    return awgn_llr(obs.value.real(), obs.tau) - ch.log_m_minus_1();
  }
  return qsf_llr(std::norm(obs.value), obs.tau) - ch.log_m_minus_1();
}

std::complex<double> denoise(const ChannelModel& ch, const ScalarObservation& obs) {
  const double p_active = sigmoid(posterior_log_odds(ch, obs));
  if (ch.kind() == ChannelKind::Awgn) {
    return {p_active, 0.0};
  }
  return p_active * obs.value / (1.0 + obs.tau);
}

double denoise_real(const ChannelModel& ch, double v, double tau) {
  if (ch.kind() != ChannelKind::Awgn) {
    throw std::invalid_argument("denoise_real: channel is complex-valued");
  }
  return denoise(ch, {v, tau}).real();
}

std::complex<double> denoise_complex(const ChannelModel& ch, std::complex<double> v, double tau) {
  if (ch.kind() != ChannelKind::Qsf) {
    throw std::invalid_argument("denoise_complex: channel is real-valued");
  }
  return denoise(ch, {v, tau});
}

double mmse_scaled(const ChannelModel& ch, double tau) {
  check_tau(tau, "mmse_scaled");
  if (std::isinf(tau)) {
    return ch.scaled_prior_variance();
  }
  const double v = ch.kind() == ChannelKind::Awgn ? awgn_mmse_scaled(ch, tau) : qsf_mmse_scaled(ch, tau);
  return std::clamp(v, 0.0, ch.scaled_prior_variance());
}

double mutual_info_scaled(const ChannelModel& ch, double tau) {
  check_tau(tau, "mutual_info_scaled");
  if (std::isinf(tau)) {
    return 0.0;
  }
  const double v =
      ch.kind() == ChannelKind::Awgn ? awgn_mutual_info_scaled(ch, tau) : qsf_mutual_info_scaled(ch, tau);
  return std::max(v, 0.0);
}

double psi_support_error_scaled(const ChannelModel& ch, double tau, double theta) {
  check_tau(tau, "psi_support_error");
  if (!(theta > 0.0)) {
    throw std::domain_error("psi_support_error: theta must be positive");
  }
  const double lm1 = ch.log_m_minus_1();
  if (ch.kind() == ChannelKind::Awgn) {
    const double sd = std::sqrt(tau);
    return std::exp(lm1 + log_q_tail(theta / sd)) + std::exp(log_q_tail((1.0 - theta) / sd));
  }
  return std::exp(lm1 - theta / tau) - std::expm1(-theta / (1.0 + tau));
}

double psi_support_error(const ChannelModel& ch, double tau, double theta) {
  return psi_support_error_scaled(ch, tau, theta) * ch.prior_active();
}

double optimal_threshold(const ChannelModel& ch, double tau) {
  check_tau(tau, "optimal_threshold");
  if (ch.kind() == ChannelKind::Awgn) {
    return 0.5 + tau * ch.log_m_minus_1();
  }
  return tau * (1.0 + tau) * (ch.log_m_minus_1() + std::log1p(1.0 / tau));
}

double pi_star(double tau, const ChannelModel& ch) {
  check_tau(tau, "pi_star");
  const double expo = -tau * (ch.log_m_minus_1() + std::log1p(1.0 / tau)) - std::log1p(tau);
  return std::clamp(-std::expm1(expo), 0.0, 1.0);
}

double EpsilonStar::epsilon_tilde() const { return std::exp(kLog2 + log_epsilon - log_m); }

EpsilonStar epsilon_star(double tau, const ChannelModel& ch) {
  check_tau(tau, "epsilon_star");
  const double lm1 = ch.log_m_minus_1();
  const double rhs = 1.0 / std::sqrt(tau);
  auto excess = [&](double log_eps) {
    return q_tail_inverse_log(log_eps) + q_tail_inverse_log(log_eps - lm1) - rhs;
  };
  const double hi = -kLog2;
  const double at_hi = excess(hi);
  if (at_hi > 0.0) {
    throw std::domain_error("epsilon_star: no solution for tau = " + std::to_string(tau) +
                            " (noise too large, bound is trivial)");
  }
  if (at_hi == 0.0) {
    return {0.5, hi, ch.log_m()};
  }
  double lo = std::log(1e-300);
  while (excess(lo) < 0.0) {
    lo *= 2.0;  // eps* below 1e-300; keep going in log domain
  }
  auto tol = [](double a, double b) { return std::abs(b - a) <= 1e-12; };
  std::uintmax_t iters = 200;
  const auto [a, b] = boost::math::tools::toms748_solve(excess, lo, hi, tol, iters);
  const double log_eps = 0.5 * (a + b);
  return {std::exp(log_eps), log_eps, ch.log_m()};
}

double epsilon_star_bound(double tau, const ChannelModel& ch) {
  try {
    return std::min(1.0, 2.0 * epsilon_star(tau, ch).epsilon);
  } catch (const std::domain_error&) {
    return 1.0;
  }
}

// --- ScalarCurves -------------------------------------------------------------

struct ScalarCurves::Impl {
  using Hermite = boost::math::interpolators::cubic_hermite<std::vector<double>>;

  std::vector<double> u;         // ln tau nodes, increasing
  std::vector<double> mm;        // M mmse, non-decreasing
  std::vector<double> mi;        // M I, non-increasing
  std::unique_ptr<Hermite> mmse;
  std::unique_ptr<Hermite> info;

  // Five-point Lagrange slopes clipped to the Fritsch-Carlson box
  // [0, 3 min(delta)], which keeps the interpolant of monotone data monotone.
  std::vector<double> monotone_slopes(const std::vector<double>& y) const {
    const std::size_t n = u.size();
    std::vector<double> d(n);
    std::vector<double> delta(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) delta[i] = (y[i + 1] - y[i]) / (u[i + 1] - u[i]);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t lo = std::min(i >= 2 ? i - 2 : 0, n - 5);
      double slope = 0.0;
      for (std::size_t j = lo; j < lo + 5; ++j) {
        if (j == i) {
          for (std::size_t m = lo; m < lo + 5; ++m) {
            if (m != i) slope += y[i] / (u[i] - u[m]);
          }
          continue;
        }
        double w = 1.0 / (u[j] - u[i]);
        for (std::size_t m = lo; m < lo + 5; ++m) {
          if (m != i && m != j) w *= (u[i] - u[m]) / (u[j] - u[m]);
        }
        slope += w * y[j];
      }
      const double left = i > 0 ? delta[i - 1] : delta[0];
      const double right = i + 1 < n ? delta[i] : delta[n - 2];
      if (left * right <= 0.0 || slope * left <= 0.0) {
        d[i] = 0.0;
        continue;
      }
      const double cap = 3.0 * std::min(std::abs(left), std::abs(right));
      d[i] = std::copysign(std::min(std::abs(slope), cap), slope);
    }
    return d;
  }

  void build(double dimension_factor) {
    std::vector<double> slope(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
      slope[i] = -dimension_factor * mm[i] * std::exp(-u[i]);
    }
    mmse = std::make_unique<Hermite>(std::vector<double>(u), std::vector<double>(mm), monotone_slopes(mm));
    info = std::make_unique<Hermite>(std::vector<double>(u), std::vector<double>(mi), std::move(slope));
  }
};

namespace {

constexpr double kCurveTolerance = 1e-11;
constexpr int kMaxRefinePasses = 24;

struct CurveSample {
  double mm;
  double mi;
};

std::vector<CurveSample> sample_curves(const ChannelModel& ch, const std::vector<double>& us) {
  std::vector<CurveSample> out(us.size());
  parallel_for(us.size(), [&](std::size_t i) {
    const double tau = std::exp(us[i]);
    out[i] = {macbound::mmse_scaled(ch, tau), macbound::mutual_info_scaled(ch, tau)};
  });
  return out;
}

}  // namespace

ScalarCurves::ScalarCurves(const ChannelModel& ch, int points) : ch_(ch), impl_(std::make_unique<Impl>()) {
  if (points < 16) {
    throw std::invalid_argument("ScalarCurves: need at least 16 grid points");
  }
  Impl& d = *impl_;
  const double u0 = std::log(kTauMin);
  const double u1 = std::log(kTauMax);
  d.u.resize(points);
  for (int i = 0; i < points; ++i) {
    d.u[i] = u0 + (u1 - u0) * i / (points - 1);
  }
  d.u.back() = u1;
  for (const auto& s : sample_curves(ch, d.u)) {
    d.mm.push_back(s.mm);
    d.mi.push_back(s.mi);
  }

  // dirty[i] marks interval [u_i, u_{i+1}] for a midpoint check.
  std::vector<char> dirty(d.u.size() - 1, 1);
  for (int pass = 0;; ++pass) {
    // Quadrature noise can break monotonicity at the last bit; the exact
    // curves are monotone, so the tables are made so as well.
    for (std::size_t i = 1; i < d.u.size(); ++i) {
      d.mm[i] = std::max(d.mm[i], d.mm[i - 1]);
    }
    for (std::size_t i = d.u.size() - 1; i-- > 0;) {
      d.mi[i] = std::max(d.mi[i], d.mi[i + 1]);
    }
    d.build(ch.dimension_factor());
    if (pass == kMaxRefinePasses) break;

    std::vector<std::size_t> check;
    std::vector<double> mids;
    for (std::size_t i = 0; i + 1 < d.u.size(); ++i) {
      if (dirty[i]) {
        check.push_back(i);
        mids.push_back(0.5 * (d.u[i] + d.u[i + 1]));
      }
    }
    const auto vals = sample_curves(ch, mids);
    std::vector<char> split(d.u.size() - 1, 0);
    bool refined = false;
    for (std::size_t j = 0; j < check.size(); ++j) {
      const double err = std::max(std::abs((*d.mmse)(mids[j]) - vals[j].mm),
                                  std::abs((*d.info)(mids[j]) - vals[j].mi));
      if (err > kCurveTolerance) {
        split[check[j]] = 1;
        refined = true;
      }
    }
    if (!refined) break;

    std::vector<double> nu;
    std::vector<double> nmm;
    std::vector<double> nmi;
    std::vector<char> near;  // per new node: within two nodes of an insertion
    std::size_t j = 0;
    for (std::size_t i = 0; i + 1 < d.u.size(); ++i) {
      nu.push_back(d.u[i]);
      nmm.push_back(d.mm[i]);
      nmi.push_back(d.mi[i]);
      near.push_back(0);
      while (j < check.size() && check[j] < i) ++j;
      if (split[i]) {
        nu.push_back(mids[j]);
        nmm.push_back(vals[j].mm);
        nmi.push_back(vals[j].mi);
        near.push_back(1);
      }
    }
    nu.push_back(d.u.back());
    nmm.push_back(d.mm.back());
    nmi.push_back(d.mi.back());
    near.push_back(0);

    // Slopes use a five-point stencil, so an insertion can move the
    // interpolant up to three intervals away.
    std::vector<char> next(nu.size() - 1, 0);
    for (std::size_t i = 0; i < near.size(); ++i) {
      if (!near[i]) continue;
      const std::size_t a = i >= 3 ? i - 3 : 0;
      const std::size_t b = std::min(i + 3, next.size());
      for (std::size_t q = a; q < b; ++q) next[q] = 1;
    }
    dirty = std::move(next);
    d.u = std::move(nu);
    d.mm = std::move(nmm);
    d.mi = std::move(nmi);
  }
}

ScalarCurves::~ScalarCurves() = default;

std::shared_ptr<const ScalarCurves> ScalarCurves::shared(const ChannelModel& ch) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::shared_ptr<const ScalarCurves>> cache;
  const std::pair<int, int> key{static_cast<int>(ch.kind()), ch.k()};
  std::lock_guard lock(mu);
  auto it = cache.find(key);
  if (it != cache.end()) {
    return it->second;
  }
  auto curves = std::make_shared<const ScalarCurves>(ch);
  cache.emplace(key, curves);
  return curves;
}

double ScalarCurves::mmse_scaled(double tau) const {
  if (!(tau >= kTauMin && tau <= kTauMax)) {
    return macbound::mmse_scaled(ch_, tau);
  }
  return std::clamp((*impl_->mmse)(std::log(tau)), 0.0, ch_.scaled_prior_variance());
}

double ScalarCurves::mutual_info_scaled(double tau) const {
  if (!(tau >= kTauMin && tau <= kTauMax)) {
    return macbound::mutual_info_scaled(ch_, tau);
  }
  return std::max((*impl_->info)(std::log(tau)), 0.0);
}

std::size_t ScalarCurves::nodes() const { return impl_->u.size(); }

}  // namespace macbound
