#include "macbound/bounds.hpp"
#include "oracle.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace macbound;

TEST_SUITE("bounds") {
  TEST_CASE("energy conversions") {
    const ChannelModel a(ChannelKind::Awgn, 100);
    const ChannelModel q(ChannelKind::Qsf, 100);
    CHECK(energy_from_ebn0_db(a, 0.0) == doctest::Approx(200.0));
    CHECK(energy_from_ebn0_db(q, 10.0) == doctest::Approx(1000.0));
    for (double db : {-3.0, 0.7, 29.1}) CHECK(ebn0_db_from_energy(a, energy_from_ebn0_db(a, db)) == doctest::Approx(db));
  }

  TEST_CASE("single-user limit, real channel with one alternative") {
    const ChannelModel ch(ChannelKind::Awgn, 1);
    for (double eps : {1e-1, 1e-3, 1e-8}) {
      const double E = energy_from_ebn0_db(ch, single_user_ebn0_db(ch, eps));
      CHECK(oracle::q(std::sqrt(E) / 2.0) == doctest::Approx(eps / 2.0).epsilon(1e-9));
    }
  }

  TEST_CASE("single-user limit, complex channel") {
    const ChannelModel ch(ChannelKind::Qsf, 100);
    const double E = energy_from_ebn0_db(ch, single_user_ebn0_db(ch, 1e-3));
    const double tau = 1.0 / E;
    const double direct = 1.0 - std::exp(-std::log1p(tau) - tau * (100.0 * std::log(2.0) + std::log1p(1.0 / tau)));
    CHECK(direct == doctest::Approx(1e-3).epsilon(1e-8));
    CHECK_THROWS(single_user_ebn0_db(ch, 1.5));
  }

  TEST_CASE("tiny density recovers the single-user limit") {
    for (auto kind : {ChannelKind::Awgn, ChannelKind::Qsf}) {
      const ChannelModel ch(kind, 100);
      BoundQuery q{ch, 1e-4, 1e-3};
      const auto rec = min_ebn0(q);
      REQUIRE(rec.ok());
      CHECK(std::abs(rec.ebn0_db - single_user_ebn0_db(ch, 1e-3)) < 0.05);
    }
  }

  TEST_CASE("solution brackets the target") {
    const ChannelModel ch(ChannelKind::Awgn, 100);
    BoundQuery q{ch, 0.03, 1e-3};
    const auto rec = min_ebn0(q);
    REQUIRE(rec.ok());
    CHECK(rec.pupe <= 1e-3);
    CHECK(pupe_bound(ch, 0.03, energy_from_ebn0_db(ch, rec.ebn0_db - 2e-4)).pupe > 1e-3);
    CHECK(rec.E == doctest::Approx(energy_from_ebn0_db(ch, rec.ebn0_db)));
  }

  TEST_CASE("sweeps are non-decreasing and flag infeasible points") {
    const ChannelModel ch(ChannelKind::Awgn, 100);
    const std::vector<double> grid{1e-3, 5e-3, 2e-2, 5e-2, 1.0};
    const auto recs = sweep_curve(ch, grid, 1e-3);
    REQUIRE(recs.size() == grid.size());
    for (std::size_t i = 1; i + 1 < recs.size(); ++i) CHECK(recs[i].ebn0_db >= recs[i - 1].ebn0_db - 1e-9);
    CHECK(recs.back().flag == PhaseFlag::Failed);
    CHECK(std::isnan(recs.back().ebn0_db));
    std::ostringstream os;
    write_curve_csv(os, recs);
    CHECK(os.str().rfind("mu,ebn0_db,E,tau_star,pupe,phase_flag\n", 0) == 0);
    CHECK(os.str().find("nan,nan,nan,nan,failed") != std::string::npos);
  }

  TEST_CASE("coupled bound never exceeds the uncoupled one") {
    const ChannelModel ch(ChannelKind::Qsf, 100);
    SweepOptions un;
    un.kind = BoundKind::Uncoupled;
    const std::vector<double> grid{2e-3, 1e-2, 3e-2};
    const auto c = sweep_curve(ch, grid, 1e-3);
    const auto u = sweep_curve(ch, grid, 1e-3, un);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (u[i].ok()) CHECK(c[i].ebn0_db <= u[i].ebn0_db + 1e-9);
    }
  }

  TEST_CASE("invalid queries") {
    const ChannelModel ch(ChannelKind::Awgn, 10);
    CHECK_THROWS(min_ebn0(BoundQuery{ch, 0.01, 0.0}));
    CHECK_THROWS(min_ebn0(BoundQuery{ch, 0.01, 1e-3, 10.0, 5.0}));
    CHECK_THROWS(sweep_curve(ch, {0.1, 0.01}, 1e-3));
  }
}
