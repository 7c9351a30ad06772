#include "macbound/potential.hpp"

#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace macbound {

namespace {

constexpr double kInvPhi = 0.61803398874989484820;  // (sqrt 5 - 1) / 2

std::vector<double> log_grid(double lo, double hi, int points) {
  std::vector<double> out(points);
  const double a = std::log(lo);
  const double b = std::log(hi);
  for (int i = 0; i < points; ++i) {
    out[i] = std::exp(a + (b - a) * i / (points - 1));
  }
  out.front() = lo;
  out.back() = hi;
  return out;
}

double scan_lo(const SystemParams& p) { return (1.0 / p.E) * (1.0 + 1e-9); }
double scan_hi(const SystemParams& p) { return 1.0 / p.E + p.mu * (1.0 + 1e-6); }

template <class F>
std::pair<double, double> golden_section(F&& f, double a, double b, double rel_tol) {
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = f(c);
  double fd = f(d);
  for (int it = 0; it < 400 && (b - a) > rel_tol * std::abs(0.5 * (a + b)); ++it) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = f(d);
    }
  }
  return fc <= fd ? std::pair{c, fc} : std::pair{d, fd};
}

}  // namespace

void validate(const SystemParams& p) {
  if (!(p.mu >= 0.0) || !std::isfinite(p.mu)) {
    throw std::invalid_argument("mu must be finite and nonnegative, got " + std::to_string(p.mu));
  }
  if (!(p.E > 0.0) || !std::isfinite(p.E)) {
    throw std::invalid_argument("E must be finite and positive, got " + std::to_string(p.E));
  }
}

double potential_value(const SystemParams& p, double tau) {
  validate(p);
  if (!(tau > 1.0 / p.E)) {
    throw std::domain_error("potential_value: tau must exceed 1/E");
  }
  const double c = p.ch.dimension_factor();
  const double info = p.mu == 0.0 ? 0.0 : p.mu * ScalarCurves::shared(p.ch)->mutual_info_scaled(tau);
  return info + c * (std::log(tau) + 1.0 / (tau * p.E) - 1.0);
}

double fixed_point_residual(const SystemParams& p, double tau) {
  return (tau - 1.0 / p.E) - p.mu * mmse_scaled(p.ch, tau);
}

PotentialLandscape global_minimizer(const SystemParams& p, const LandscapeOptions& opt) {
  validate(p);
  if (opt.grid_points < 16) {
    throw std::invalid_argument("global_minimizer: grid_points must be at least 16");
  }
  PotentialLandscape out;
  const double inv_e = 1.0 / p.E;
  if (p.mu == 0.0) {
    const double c = p.ch.dimension_factor();
    out.samples.push_back({inv_e, c * std::log(inv_e), true});
    out.minima.push_back({inv_e, c * std::log(inv_e), inv_e, inv_e, true});
    out.global_argmin_max = inv_e;
    return out;
  }

  auto F = [&](double tau) { return potential_value(p, tau); };
  const auto taus = log_grid(scan_lo(p), scan_hi(p), opt.grid_points);
  out.samples.reserve(taus.size());
  for (double t : taus) out.samples.push_back({t, F(t), false});

  const std::size_t n = out.samples.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double fi = out.samples[i].F;
    const bool left_ok = i == 0 || fi <= out.samples[i - 1].F;
    const bool right_ok = i + 1 == n || fi < out.samples[i + 1].F;
    if (!(left_ok && right_ok)) continue;
    out.samples[i].is_min = true;
    const double a = i == 0 ? taus[0] : taus[i - 1];
    const double b = i + 1 == n ? taus[n - 1] : taus[i + 1];
    auto [t, f] = golden_section(F, a, b, opt.refine_rel_tol);
    if (fi < f) {
      t = taus[i];
      f = fi;
    }
    const bool edge = i == 0 && t - taus[0] <= 100.0 * opt.refine_rel_tol * (b - a);
    out.minima.push_back({t, f, a, b, edge});
  }

  double best = std::numeric_limits<double>::infinity();
  for (const auto& m : out.minima) best = std::min(best, m.F);
  const double slack = opt.tie_rel_tol * std::max(std::abs(best), 1.0);
  int tied = 0;
  for (const auto& m : out.minima) {
    if (m.F <= best + slack) {
      ++tied;
      if (m.tau > out.global_argmin_max) {
        out.global_argmin_max = m.tau;
        out.boundary_min = m.at_boundary;
      }
    }
  }
  out.tie = tied > 1;
  return out;
}

std::vector<double> uncoupled_fixed_points(const SystemParams& p) {
  validate(p);
  const double inv_e = 1.0 / p.E;
  if (p.mu == 0.0) return {inv_e};

  const auto curves = ScalarCurves::shared(p.ch);
  auto g_fast = [&](double tau) { return (tau - inv_e) - p.mu * curves->mmse_scaled(tau); };
  auto g = [&](double tau) { return fixed_point_residual(p, tau); };

  auto refine = [&](double a, double b) {
    const double ga = g(a);
    const double gb = g(b);
    if (ga == 0.0) return a;
    if (gb == 0.0) return b;
    if ((ga < 0.0) == (gb < 0.0)) {
      return 0.5 * (a + b);  // table and direct values disagree on the sign
    }
    std::uintmax_t iters = 200;
    auto tol = [](double x, double y) { return std::abs(y - x) <= 1e-15 * std::abs(x); };
    const auto [lo, hi] = boost::math::tools::toms748_solve(g, a, b, ga, gb, tol, iters);
    return std::abs(g(lo)) <= std::abs(g(hi)) ? lo : hi;
  };

  std::vector<double> roots;
  const auto taus = log_grid(scan_lo(p), scan_hi(p), 2048);
  double prev_t = inv_e;
  double prev_g = -p.mu * mmse_scaled(p.ch, inv_e);
  if (prev_g == 0.0) {
    roots.push_back(inv_e);
  }
  for (double t : taus) {
    const double gt = g_fast(t);
    const bool up = prev_g < 0.0 && gt >= 0.0;
    const bool down = prev_g > 0.0 && gt <= 0.0;
    if (up || down) {
      roots.push_back(refine(prev_t, t));
    }
    prev_t = t;
    prev_g = gt;
  }
  std::sort(roots.begin(), roots.end());
  roots.erase(std::unique(roots.begin(), roots.end()), roots.end());
  return roots;
}

}  // namespace macbound
