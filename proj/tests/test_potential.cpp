#include "macbound/potential.hpp"

#include <doctest.h>

#include <cmath>

using namespace macbound;

namespace {

double brute_force_argmin(const SystemParams& p, int points) {
  const double lo = (1.0 / p.E) * (1.0 + 1e-9);
  const double hi = 1.0 / p.E + p.mu * 1.01;
  double best_tau = lo;
  double best = INFINITY;
  for (int i = 0; i <= points; ++i) {
    const double tau = lo * std::pow(hi / lo, static_cast<double>(i) / points);
    const double f = potential_value(p, tau);
    if (f < best) {
      best = f;
      best_tau = tau;
    }
  }
  return best_tau;
}

}  // namespace

TEST_SUITE("potential") {
  TEST_CASE("value is the information term plus the energy penalty") {
    for (auto kind : {ChannelKind::Awgn, ChannelKind::Qsf}) {
      const ChannelModel ch(kind, 10);
      const SystemParams p{0.07, 300.0, ch};
      const double c = kind == ChannelKind::Awgn ? 0.5 : 1.0;
      for (double tau : {0.004, 0.02, 0.06}) {
        const double expect = p.mu * mutual_info_scaled(ch, tau) + c * (std::log(tau) + 1.0 / (tau * p.E) - 1.0);
        CHECK(potential_value(p, tau) == doctest::Approx(expect).epsilon(1e-9));
      }
    }
  }

  TEST_CASE("zero density leaves only the noise floor") {
    const SystemParams p{0.0, 50.0, ChannelModel(ChannelKind::Awgn, 100)};
    CHECK(global_minimizer(p).global_argmin_max == doctest::Approx(1.0 / 50.0));
  }

  TEST_CASE("global minimizer matches a dense brute-force scan") {
    struct Case {
      ChannelKind kind;
      int k;
      double mu;
      double E;
    };
    for (const Case& cs : {Case{ChannelKind::Awgn, 100, 0.05, 317.0}, Case{ChannelKind::Awgn, 100, 0.02, 120.0},
                           Case{ChannelKind::Awgn, 4, 0.2, 40.0}, Case{ChannelKind::Qsf, 100, 0.05, 3000.0},
                           Case{ChannelKind::Qsf, 10, 0.3, 100.0}}) {
      const SystemParams p{cs.mu, cs.E, ChannelModel(cs.kind, cs.k)};
      const auto land = global_minimizer(p);
      const double brute = brute_force_argmin(p, 40000);
      CAPTURE(cs.mu);
      CHECK(land.global_argmin_max == doctest::Approx(brute).epsilon(2e-4));
      CHECK(potential_value(p, land.global_argmin_max) <= potential_value(p, brute) + 1e-12);
    }
  }

  TEST_CASE("interior minima are fixed points of the scalar recursion") {
    const SystemParams p{0.05, 317.0, ChannelModel(ChannelKind::Awgn, 100)};
    const auto land = global_minimizer(p);
    REQUIRE(land.minima.size() >= 2);
    for (const auto& m : land.minima) {
      if (m.at_boundary) continue;
      CHECK(std::abs(fixed_point_residual(p, m.tau)) <= 1e-6 * m.tau);
    }
  }

  TEST_CASE("uncoupled fixed points in the bistable regime") {
    const SystemParams p{0.05, 317.0, ChannelModel(ChannelKind::Awgn, 100)};
    const auto fps = uncoupled_fixed_points(p);
    REQUIRE(fps.size() == 3);
    for (std::size_t i = 0; i < fps.size(); ++i) {
      CHECK(std::abs(fixed_point_residual(p, fps[i])) <= 1e-9 * fps[i]);
      if (i) CHECK(fps[i] > fps[i - 1]);
    }
    const SystemParams easy{0.001, 317.0, p.ch};
    CHECK(uncoupled_fixed_points(easy).size() == 1);
  }

  TEST_CASE("a coarse scan that peaks at its first sample still yields an interior minimum") {
    const SystemParams p{0.1, 50.0, ChannelModel(ChannelKind::Awgn, 10)};
    LandscapeOptions opt;
    opt.grid_points = 16;
    const auto land = global_minimizer(p, opt);
    REQUIRE(land.minima.size() == 1);
    CHECK_FALSE(land.minima[0].at_boundary);
    CHECK_FALSE(land.boundary_min);
    CHECK(land.minima[0].tau > 1.04 / p.E);
    CHECK(std::abs(fixed_point_residual(p, land.minima[0].tau)) <= 1e-6 * land.minima[0].tau);
  }

  TEST_CASE("rejects invalid parameters") {
    const ChannelModel ch(ChannelKind::Awgn, 4);
    CHECK_THROWS(validate(SystemParams{-0.1, 10.0, ch}));
    CHECK_THROWS(validate(SystemParams{0.1, 0.0, ch}));
    CHECK_THROWS(global_minimizer(SystemParams{0.1, -1.0, ch}));
  }
}
