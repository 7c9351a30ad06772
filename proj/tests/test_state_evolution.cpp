#include "macbound/potential.hpp"
#include "macbound/state_evolution.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace macbound;

TEST_SUITE("state_evolution") {
  TEST_CASE("base matrix shape and column sums") {
    for (auto [omega, Lambda, rho] : {std::tuple{3, 16, 0.0}, std::tuple{6, 40, 1e-3}, std::tuple{20, 200, 0.0}}) {
      const BaseMatrix B(omega, Lambda, rho);
      CHECK(B.rows() == Lambda + omega - 1);
      CHECK(B.cols() == Lambda);
      for (int c = 0; c < B.cols(); ++c) {
        double sum = 0.0;
        for (int r = 0; r < B.rows(); ++r) sum += B(r, c);
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));
      }
      CHECK(B(0, 0) == doctest::Approx((1.0 - rho) / omega));
      if (Lambda > omega) CHECK(B(omega, 0) == doctest::Approx(rho / (Lambda - 1)));
    }
    CHECK(BaseMatrix::uncoupled().rows() == 1);
    CHECK(BaseMatrix::uncoupled()(0, 0) == 1.0);
    CHECK(BaseMatrix(3, 16, 0.0).rate_penalty() == doctest::Approx(18.0 / 16.0));
  }

  TEST_CASE("base matrix rejects invalid designs") {
    CHECK_THROWS_AS(BaseMatrix(0, 5, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(BaseMatrix(3, 4, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(BaseMatrix(3, 16, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(BaseMatrix(3, 16, -0.1), std::invalid_argument);
  }

  TEST_CASE("one step computed by hand") {
    const ChannelModel ch(ChannelKind::Awgn, 3);
    const BaseMatrix B(2, 3, 0.1);
    const SeProblem prob{ch, B, 0.2, 50.0};
    SeState s;
    s.psi = {0.4, 0.2, 0.7};
    // Build gamma, phi and tau from psi directly.
    const double mu_eff = 0.2 * 4.0 / 3.0;
    std::vector<double> phi(4);
    for (int r = 0; r < 4; ++r) {
      double g = 0.0;
      for (int c = 0; c < 3; ++c) g += B(r, c) * s.psi[c];
      phi[r] = 1.0 / 50.0 + mu_eff * g;
    }
    std::vector<double> tau(3);
    for (int c = 0; c < 3; ++c) {
      double inv = 0.0;
      for (int r = 0; r < 4; ++r) inv += B(r, c) / phi[r];
      tau[c] = 1.0 / inv;
    }
    s.tau = tau;
    s.phi = phi;
    const SeState next = se_step(prob, s);
    for (int c = 0; c < 3; ++c) {
      CHECK(next.psi[c] == doctest::Approx(mmse_scaled(ch, tau[c])).epsilon(1e-9));
    }
    CHECK(next.t == 1);
  }

  TEST_CASE("uncoupled recursion settles on the largest scalar fixed point") {
    const ChannelModel ch(ChannelKind::Awgn, 100);
    const SeProblem prob{ch, BaseMatrix::uncoupled(), 0.05, 317.0};
    const auto res = se_run(prob);
    REQUIRE(res.converged);
    const double largest = uncoupled_fixed_points(SystemParams{0.05, 317.0, ch}).back();
    CHECK(res.max_tau() == doctest::Approx(largest).epsilon(1e-7));
  }

  TEST_CASE("coupled recursion is monotone and lands below the potential bound") {
    for (auto kind : {ChannelKind::Awgn, ChannelKind::Qsf}) {
      const ChannelModel ch(kind, 100);
      const BaseMatrix B(3, 16, 0.0);
      const double mu = 0.02;
      const double E = kind == ChannelKind::Awgn ? 1000.0 : 3000.0;
      const SeProblem prob{ch, B, mu, E};
      const auto res = se_run(prob);
      REQUIRE(res.converged);
      for (std::size_t t = 1; t < res.trajectory.size(); ++t) {
        for (int c = 0; c < B.cols(); ++c) {
          CHECK(res.trajectory[t].tau[c] <= res.trajectory[t - 1].tau[c] * (1.0 + 1e-12));
        }
      }
      const double bound = global_minimizer(SystemParams{prob.effective_mu(), E, ch}).global_argmin_max;
      CHECK(res.max_tau() <= bound + 1e-6);
    }
  }

  TEST_CASE("both initializations reach the same fixed point") {
    const ChannelModel ch(ChannelKind::Awgn, 4);
    const SeProblem prob{ch, BaseMatrix(3, 16, 0.0), 0.1, 35.0};
    SeRunOptions a;
    a.init = SeInit::Infinite;
    SeRunOptions b;
    b.init = SeInit::ZeroEstimate;
    const auto ra = se_run(prob, a);
    const auto rb = se_run(prob, b);
    for (int c = 0; c < 16; ++c) CHECK(ra.profile()[c] == doctest::Approx(rb.profile()[c]).epsilon(1e-8));
    CHECK(std::isinf(se_initial_state(prob, SeInit::Infinite).phi[0]));
    CHECK(se_initial_state(prob, SeInit::ZeroEstimate).psi[0] == 1.0);
  }

  TEST_CASE("recursion started below the fixed point moves upward") {
    const ChannelModel ch(ChannelKind::Awgn, 4);
    const SeProblem prob{ch, BaseMatrix::uncoupled(), 0.1, 35.0};
    SeRunOptions opt;
    opt.init = SeInit::ZeroEstimate;
    SeState s = se_initial_state(prob, SeInit::ZeroEstimate);
    s.psi = {1e-9};
    SeState up = se_step(prob, s);
    CHECK(up.tau[0] > 1.0 / 35.0);
    CHECK_NOTHROW(se_run(prob, opt));
  }

  TEST_CASE("predictions from a profile") {
    const ChannelModel q(ChannelKind::Qsf, 8);
    const std::vector<double> prof{0.01, 0.02, 0.04};
    const auto pred = coupled_pupe_prediction(q, prof);
    double mean = 0.0;
    for (double t : prof) mean += pi_star(t, q) / 3.0;
    CHECK(pred.pupe == doctest::Approx(mean).epsilon(1e-14));
    CHECK(section_error_prediction(q, prof, pred.thresholds) == doctest::Approx(mean).epsilon(1e-9));
    const ChannelModel a(ChannelKind::Awgn, 8);
    const auto pa = coupled_pupe_prediction(a, prof);
    CHECK(pa.per_block[0] == doctest::Approx(epsilon_star_bound(0.01, a)));
    CHECK_THROWS(section_error_prediction(a, prof, {0.5}));
    CHECK_THROWS(coupled_pupe_prediction(a, {}));
  }
}
