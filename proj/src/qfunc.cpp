#include "macbound/qfunc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace macbound {

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // ln sqrt(2 pi)
constexpr double kMillsSwitch = 5.0;

// Mills ratio Q(x)/phi(x) for x >= kMillsSwitch, via the Laplace continued
// fraction 1/(x + 1/(x + 2/(x + 3/(x + ...)))) evaluated from the tail.
double mills_ratio(double x) {
  constexpr int kTerms = 240;
  double frac = 0.0;
  for (int j = kTerms; j >= 1; --j) {
    frac = j / (x + frac);
  }
  return 1.0 / (x + frac);
}

}  // namespace

double log_normal_pdf(double x) { return -0.5 * x * x - kLogSqrt2Pi; }

double log_q_tail(double x) {
  if (std::isnan(x)) {
    return x;
  }
  if (x < kMillsSwitch) {
    if (x < -8.0) {
      // Q(x) = 1 - Q(-x) with Q(-x) tiny.
      return std::log1p(-std::exp(log_q_tail(-x)));
    }
    return std::log(0.5 * std::erfc(x / std::numbers::sqrt2));
  }
  if (std::isinf(x)) {
    return -std::numeric_limits<double>::infinity();
  }
  return log_normal_pdf(x) + std::log(mills_ratio(x));
}

double q_tail_inverse_log(double log_p) {
  if (!(log_p < 0.0)) {
    throw std::domain_error("q_tail_inverse_log: log_p must be negative, got " +
                            std::to_string(log_p));
  }
  constexpr double kLogHalf = -0.69314718055994530942;
  if (log_p > kLogHalf) {
    // Upper half of the distribution: Q(x) = p > 1/2 means Q(-x) = 1 - p.
    return -q_tail_inverse_log(std::log(-std::expm1(log_p)));
  }
  if (log_p == kLogHalf) {
    return 0.0;
  }
  const double target_l = -log_p;
  // Q(x) < exp(-x^2/2)/2 for x > 0, so ln Q(sqrt(2L)) < -L.
  double lo = 0.0;
  double hi = std::sqrt(2.0 * target_l) + 1.0;
  double x = target_l > 1.5 ? std::sqrt(2.0 * target_l - std::log(4.0 * std::numbers::pi * target_l))
                            : std::sqrt(2.0 * target_l) * 0.5;
  if (!(x > lo && x < hi)) {
    x = 0.5 * (lo + hi);
  }
  for (int it = 0; it < 200; ++it) {
    const double lq = log_q_tail(x);
    const double f = lq - log_p;
    if (f > 0.0) {
      lo = x;
    } else {
      hi = x;
    }
    if (std::abs(f) <= 1e-15 * target_l) {
      return x;
    }
    // d/dx ln Q(x) = -phi(x)/Q(x)
    const double slope = -std::exp(log_normal_pdf(x) - lq);
    double next = x - f / slope;
    if (!(next > lo && next < hi)) {
      next = 0.5 * (lo + hi);
    }
    if (std::abs(next - x) <= 1e-16 * std::max(1.0, std::abs(x))) {
      return next;
    }
    x = next;
  }
  return x;
}

}  // namespace macbound
