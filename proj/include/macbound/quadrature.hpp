#pragma once

#include <functional>
#include <span>

namespace macbound {

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
  int intervals = 0;
};

/// Globally adaptive Gauss-Kronrod integration over [points.front(),
/// points.back()], split first at every interior breakpoint. Refinement stops
/// once the summed error estimate is below max(abs_tol, rel_tol * |value|).
/// Pieces whose estimate sits at rounding level, or stalls under bisection
/// after the piece is resolved, are frozen.
QuadratureResult integrate_adaptive(const std::function<double(double)>& f,
                                    std::span<const double> points, double abs_tol = 1e-14,
                                    double rel_tol = 1e-12, int max_intervals = 4000);

}  // namespace macbound
