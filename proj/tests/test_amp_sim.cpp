#include "macbound/amp_sim.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace macbound;

namespace {

SimConfig small_config(ChannelKind kind) {
  SimConfig cfg;
  cfg.ch = ChannelModel(kind, 4);
  cfg.n = 720;
  cfg.K = 72;
  cfg.base = BaseMatrix(3, 16, 0.0);
  cfg.E = 35.0;
  cfg.master_seed = 12345;
  return cfg;
}

}  // namespace

TEST_SUITE("amp_sim") {
  TEST_CASE("counter streams are reproducible and separated by key") {
    CounterRng a(7, 3, StreamRole::Noise);
    CounterRng b(7, 3, StreamRole::Noise);
    CounterRng c(7, 3, StreamRole::Codebook);
    CounterRng d(7, 4, StreamRole::Noise);
    for (int i = 0; i < 100; ++i) {
      const auto x = a();
      CHECK(x == b());
      CHECK(x != c());
      CHECK(x != d());
    }
  }

  TEST_CASE("configuration checks") {
    SimConfig cfg = small_config(ChannelKind::Awgn);
    CHECK_NOTHROW(validate(cfg));
    cfg.n = 721;
    CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
    cfg = small_config(ChannelKind::Awgn);
    cfg.ch = ChannelModel(ChannelKind::Awgn, 2);
    cfg.K = 3;
    CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
    cfg = small_config(ChannelKind::Awgn);
    cfg.ch = ChannelModel(ChannelKind::Awgn, 13);
    CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
  }

  TEST_CASE("instances are bit-identical for equal seeds") {
    const SimConfig cfg = small_config(ChannelKind::Qsf);
    const auto a = sample_instance(cfg, 9);
    const auto b = sample_instance(cfg, 9);
    const auto c = sample_instance(cfg, 10);
    CHECK(a.a_re == b.a_re);
    CHECK(a.a_im == b.a_im);
    CHECK(a.y_re == b.y_re);
    CHECK(a.u_im == b.u_im);
    CHECK(a.y_re != c.y_re);
  }

  TEST_CASE("one active entry per section") {
    for (auto kind : {ChannelKind::Awgn, ChannelKind::Qsf}) {
      const SimConfig cfg = small_config(kind);
      const auto inst = sample_instance(cfg, 0);
      for (int u = 0; u < cfg.K; ++u) {
        int active = 0;
        for (int m = 0; m < inst.M; ++m) {
          const std::size_t j = static_cast<std::size_t>(u) * inst.M + m;
          active += inst.support[j];
          if (!inst.support[j]) CHECK(inst.u_re[j] == 0.0);
        }
        CHECK(active == 1);
        const std::size_t j = static_cast<std::size_t>(u) * inst.M + inst.messages[u];
        if (kind == ChannelKind::Awgn) CHECK(inst.u_re[j] == 1.0);
      }
    }
  }

  TEST_CASE("zero energy leaves pure noise") {
    SimConfig cfg = small_config(ChannelKind::Awgn);
    cfg.E = 0.0;
    const auto inst = sample_instance(cfg, 4);
    CounterRng rng(cfg.master_seed, 4, StreamRole::Noise);
    std::normal_distribution<double> normal;
    for (int i = 0; i < cfg.n; ++i) CHECK(inst.y_re[i] == normal(rng));
  }

  TEST_CASE("codebook variance follows the base matrix") {
    const SimConfig cfg = small_config(ChannelKind::Awgn);
    const auto inst = sample_instance(cfg, 1);
    const int L = cfg.n / cfg.base.rows();
    const long long N = inst.p / cfg.base.cols();
    for (int r : {0, 5, 17}) {
      for (int c : {0, 4, 15}) {
        double s = 0.0;
        double s2 = 0.0;
        const double count = static_cast<double>(L) * N;
        for (int i = r * L; i < (r + 1) * L; ++i) {
          for (long long j = c * N; j < (c + 1) * N; ++j) {
            const double a = inst.a_re[static_cast<std::size_t>(i) * inst.p + j];
            s += a * a;
            s2 += a * a * a * a;
          }
        }
        const double mean = s / count;
        const double expect = cfg.E * cfg.base(r, c) * cfg.base.rows() / cfg.n;
        if (expect == 0.0) {
          CHECK(mean == 0.0);
        } else {
          const double se = std::sqrt((s2 / count - mean * mean) / count);
          CHECK(std::abs(mean - expect) <= 5.0 * se);
        }
      }
    }
  }

  TEST_CASE("decoder and error counting") {
    AmpOutput out;
    out.obs_re.assign(32, 0.0);
    CHECK(decode_support(out, {0.5, 0.5}, 2) == std::vector<std::uint8_t>(32, 0));
    out.obs_re.assign(32, 0.3);
    CHECK(decode_support(out, {1e300, 1e300}, 2) == std::vector<std::uint8_t>(32, 0));
    CHECK(decode_support(out, {1e-300, 1e-300}, 2) == std::vector<std::uint8_t>(32, 1));

    std::vector<std::uint8_t> truth(8 * 4, 0);
    for (int u = 0; u < 8; ++u) truth[u * 4 + (u % 4)] = 1;
    auto r = section_error_rate(truth, truth, 4);
    CHECK(r.ser == 0.0);
    CHECK(r.m_dh == 0.0);
    auto flipped = truth;
    flipped[3 * 4 + 1] ^= 1;
    r = section_error_rate(truth, flipped, 4);
    CHECK(r.ser == doctest::Approx(1.0 / 8.0));
    CHECK(r.m_dh == doctest::Approx(1.0 / 8.0));
    flipped[3 * 4 + 2] ^= 1;
    flipped[5 * 4] ^= 1;
    r = section_error_rate(truth, flipped, 4);
    CHECK(r.ser == doctest::Approx(2.0 / 8.0));
    CHECK(r.m_dh == doctest::Approx(3.0 / 8.0));
    CHECK_THROWS(section_error_rate(truth, std::vector<std::uint8_t>(31), 4));
  }

  TEST_CASE("a lone user at very high energy is recovered exactly") {
    SimConfig cfg;
    cfg.ch = ChannelModel(ChannelKind::Awgn, 4);
    cfg.n = 64;
    cfg.K = 1;
    cfg.base = BaseMatrix::uncoupled();
    cfg.E = 1e6;
    const auto se = simulation_state_evolution(cfg);
    const int T = static_cast<int>(se.trajectory.size()) - 1;
    for (std::uint64_t trial = 0; trial < 5; ++trial) {
      const auto inst = sample_instance(cfg, trial);
      const auto out = amp_run(cfg, inst, se, T);
      std::vector<double> th;
      for (double t : out.tau) th.push_back(optimal_threshold(cfg.ch, t));
      CHECK(decode_support(out, th, 1) == inst.support);
    }
  }

  TEST_CASE("dimension mismatches are rejected") {
    const SimConfig cfg = small_config(ChannelKind::Awgn);
    const auto inst = sample_instance(cfg, 0);
    const auto se = simulation_state_evolution(cfg);
    SimConfig other = cfg;
    other.n = 1440;
    CHECK_THROWS_AS(amp_run(other, inst, se, 2), std::invalid_argument);
    SimConfig uncoupled = cfg;
    uncoupled.base = BaseMatrix::uncoupled();
    const auto se_unc = simulation_state_evolution(uncoupled);
    CHECK_THROWS_AS(amp_run(cfg, inst, se_unc, 2), std::invalid_argument);
    CHECK_THROWS_AS(amp_run(cfg, inst, se, static_cast<int>(se.trajectory.size()) + 3), std::invalid_argument);
  }

  TEST_CASE("effective noise matches state evolution") {
    for (auto kind : {ChannelKind::Awgn, ChannelKind::Qsf}) {
      SimConfig cfg;
      cfg.ch = ChannelModel(kind, 4);
      cfg.n = 1500;
      cfg.K = 150;
      cfg.base = BaseMatrix::uncoupled();
      cfg.E = kind == ChannelKind::Awgn ? 40.0 : 400.0;
      cfg.trials = 30;
      cfg.master_seed = 77;
      const auto rep = monte_carlo(cfg);
      REQUIRE(rep.failed == 0);
      REQUIRE(rep.blocks.size() == 1);
      const auto& b = rep.blocks[0];
      CAPTURE(b.tau_se);
      CAPTURE(b.residual_mean);
      CHECK(std::abs(b.residual_mean - b.tau_se) <= 3.0 * b.residual_stderr);
      CHECK(rep.ser_within_bound);
      CHECK(std::abs(rep.energy_mean - cfg.E) <= 5.0 * rep.energy_stderr);
    }
  }

  TEST_CASE("both initializations agree on the error rate") {
    SimConfig cfg = small_config(ChannelKind::Awgn);
    cfg.trials = 10;
    const auto a = monte_carlo(cfg);
    cfg.init = SeInit::Infinite;
    const auto b = monte_carlo(cfg);
    CHECK(std::abs(a.ser_mean - b.ser_mean) <= 3.0 * std::hypot(a.ser_stderr, b.ser_stderr) + 1e-12);
    CHECK(a.predicted_ser == doctest::Approx(b.predicted_ser).epsilon(1e-6));
  }

  TEST_CASE("perturbed thresholds do not beat the optimal ones") {
    SimConfig cfg = small_config(ChannelKind::Awgn);
    cfg.E = 30.0;
    cfg.trials = 40;
    const auto opt = monte_carlo(cfg);
    cfg.threshold_scale = 1.1;
    const auto pert = monte_carlo(cfg);
    CHECK(pert.predicted_ser >= opt.predicted_ser);
    CHECK(pert.ser_mean >= opt.ser_mean - 2.0 * std::hypot(opt.ser_stderr, pert.ser_stderr));
  }

  TEST_CASE("reports are reproducible") {
    SimConfig cfg = small_config(ChannelKind::Qsf);
    cfg.E = 300.0;
    const auto a = monte_carlo(cfg);
    const auto b = monte_carlo(cfg);
    REQUIRE(a.trials.size() == 1);
    CHECK(a.trials[0].ser == b.trials[0].ser);
    CHECK(a.trials[0].residual == b.trials[0].residual);
    CHECK(a.trials[0].energy_mean == b.trials[0].energy_mean);
  }
}
