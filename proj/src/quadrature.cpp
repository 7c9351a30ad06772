#include "macbound/quadrature.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <vector>

namespace macbound {

namespace {

using Rule = boost::math::quadrature::gauss_kronrod<double, 21>;

constexpr double kNoise = 128.0 * std::numeric_limits<double>::epsilon();
constexpr double kResolved = 1e-7;

struct Piece {
  double a;
  double b;
  double value;
  double error;
  double l1;
  bool operator<(const Piece& other) const { return error < other.error; }
};

Piece evaluate(const std::function<double(double)>& f, double a, double b) {
  double err = 0.0;
  double l1 = 0.0;
  const double v = Rule::integrate(f, a, b, 0, 0.0, &err, &l1);
  // The single-level rule reports its error on the reference interval.
  return {a, b, v, err * 0.5 * (b - a), l1};
}

}  // namespace

QuadratureResult integrate_adaptive(const std::function<double(double)>& f,
                                    std::span<const double> points, double abs_tol,
                                    double rel_tol, int max_intervals) {
  std::vector<double> cuts(points.begin(), points.end());
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  std::priority_queue<Piece> heap;
  double total = 0.0;
  double total_err = 0.0;
  double frozen_err = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    if (!(cuts[i + 1] > cuts[i])) {
      continue;
    }
    Piece p = evaluate(f, cuts[i], cuts[i + 1]);
    if (p.error <= kNoise * p.l1) {
      frozen_err += p.error;
      p.error = 0.0;
    }
    total += p.value;
    total_err += p.error;
    heap.push(p);
  }

  constexpr double kFloor = 64.0 * std::numeric_limits<double>::epsilon();
  int count = static_cast<int>(heap.size());
  while (!heap.empty() && count < max_intervals) {
    const double target = std::max(abs_tol, std::max(rel_tol, kFloor) * std::abs(total));
    if (total_err <= target || total_err < std::numeric_limits<double>::min()) {
      break;
    }
    Piece worst = heap.top();
    if (!(worst.error > 0.0)) {
      break;
    }
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      // Interval exhausted at double resolution; keep its estimate.
      total_err -= worst.error;
      worst.error = 0.0;
      heap.push(worst);
      continue;
    }
    Piece left = evaluate(f, worst.a, mid);
    Piece right = evaluate(f, mid, worst.b);
    total += left.value + right.value - worst.value;
    total_err -= worst.error;
    // An estimate at rounding level, or one that stalls under halving once
    // the piece is resolved, is noise in the integrand.
    const bool stalled = left.error + right.error > 0.75 * worst.error;
    for (Piece* child : {&left, &right}) {
      if (child->error <= kNoise * child->l1 || (stalled && child->error <= kResolved * child->l1)) {
        frozen_err += child->error;
        child->error = 0.0;
      }
    }
    total_err += left.error + right.error;
    heap.push(left);
    heap.push(right);
    ++count;
  }

  // Re-sum from the pieces to drop accumulated update rounding.
  QuadratureResult out;
  out.intervals = static_cast<int>(heap.size());
  std::vector<Piece> pieces;
  pieces.reserve(heap.size());
  while (!heap.empty()) {
    pieces.push_back(heap.top());
    heap.pop();
  }
  std::sort(pieces.begin(), pieces.end(), [](const Piece& x, const Piece& y) { return x.a < y.a; });
  for (const Piece& p : pieces) {
    out.value += p.value;
    out.error += p.error;
  }
  out.error += frozen_err;
  return out;
}

}  // namespace macbound
