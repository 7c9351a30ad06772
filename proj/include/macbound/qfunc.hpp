#pragma once

namespace macbound {

/// Natural log of the standard normal upper tail, ln Q(x).
///
/// Uses erfc for moderate arguments and a continued-fraction Mills ratio
/// (the scaled complementary error function) once Q(x) would lose relative
/// precision, so the result stays finite far beyond the double underflow of
/// Q itself.
double log_q_tail(double x);

/// Inverse of log_q_tail: returns x with ln Q(x) = log_p. Requires log_p < 0.
/// Accurate down to log_p of several hundred (p far below 1e-300).
double q_tail_inverse_log(double log_p);

/// ln of the standard normal density.
double log_normal_pdf(double x);

}  // namespace macbound
