#include "macbound/amp_sim.hpp"

#include "macbound/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <stdexcept>
#include <string>

namespace macbound {

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
constexpr double kInstanceBudgetBytes = 3.0 * 1024 * 1024 * 1024;

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double instance_bytes(const SimConfig& cfg) {
  const double entries = static_cast<double>(cfg.n) * static_cast<double>(cfg.sections_length());
  return entries * sizeof(double) * (cfg.ch.complex_valued() ? 2.0 : 1.0);
}

struct Layout {
  int rows_per_block;
  long long cols_per_block;
};

Layout layout_of(const SimConfig& cfg) {
  return {cfg.n / cfg.base.rows(), cfg.sections_length() / cfg.base.cols()};
}

// out = A x, with A given as split real/imaginary parts (imaginary may be empty).
void apply(const SimInstance& inst, const std::vector<double>& xr, const std::vector<double>& xi,
           std::vector<double>& outr, std::vector<double>& outi) {
  const std::size_t p = static_cast<std::size_t>(inst.p);
  outr.assign(inst.n, 0.0);
  if (inst.complex_valued()) outi.assign(inst.n, 0.0);
  for (int i = 0; i < inst.n; ++i) {
    const double* ar = inst.a_re.data() + static_cast<std::size_t>(i) * p;
    double re = 0.0;
    if (!inst.complex_valued()) {
      for (std::size_t j = 0; j < p; ++j) re += ar[j] * xr[j];
      outr[i] = re;
      continue;
    }
    const double* ai = inst.a_im.data() + static_cast<std::size_t>(i) * p;
    double im = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      re += ar[j] * xr[j] - ai[j] * xi[j];
      im += ar[j] * xi[j] + ai[j] * xr[j];
    }
    outr[i] = re;
    outi[i] = im;
  }
}

// out = A^* z (conjugate transpose).
void apply_adjoint(const SimInstance& inst, const std::vector<double>& zr, const std::vector<double>& zi,
                   std::vector<double>& outr, std::vector<double>& outi) {
  const std::size_t p = static_cast<std::size_t>(inst.p);
  outr.assign(p, 0.0);
  if (inst.complex_valued()) outi.assign(p, 0.0);
  for (int i = 0; i < inst.n; ++i) {
    const double* ar = inst.a_re.data() + static_cast<std::size_t>(i) * p;
    const double wr = zr[i];
    if (!inst.complex_valued()) {
      for (std::size_t j = 0; j < p; ++j) outr[j] += ar[j] * wr;
      continue;
    }
    const double* ai = inst.a_im.data() + static_cast<std::size_t>(i) * p;
    const double wi = zi[i];
    for (std::size_t j = 0; j < p; ++j) {
      outr[j] += ar[j] * wr + ai[j] * wi;
      outi[j] += ar[j] * wi - ai[j] * wr;
    }
  }
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double stderr_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

}  // namespace

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t trial, StreamRole role)
    : key_(mix64(mix64(mix64(seed) ^ trial) ^ (static_cast<std::uint64_t>(role) + 1) * kGolden)) {}

CounterRng::result_type CounterRng::operator()() { return mix64(key_ + (++counter_) * kGolden); }

long long SimConfig::sections_length() const { return static_cast<long long>(K) << ch.k(); }

void validate(const SimConfig& cfg) {
  auto fail = [](const std::string& what) { throw std::invalid_argument("simulation config: " + what); };
  if (cfg.ch.k() > 12) fail("k must be <= 12 for simulation, got " + std::to_string(cfg.ch.k()));
  if (cfg.n < 1 || cfg.K < 1) fail("n and K must be positive");
  if (cfg.n % cfg.base.rows() != 0) {
    fail("R = " + std::to_string(cfg.base.rows()) + " must divide n = " + std::to_string(cfg.n));
  }
  if (cfg.sections_length() % cfg.base.cols() != 0) {
    fail("C = " + std::to_string(cfg.base.cols()) + " must divide p = K M = " +
         std::to_string(cfg.sections_length()));
  }
  if (!(cfg.E >= 0.0) || !std::isfinite(cfg.E)) fail("E must be finite and >= 0");
  if (cfg.T < 0) fail("T must be >= 0");
  if (cfg.trials < 1) fail("trials must be >= 1");
  if (!(cfg.threshold_scale > 0.0)) fail("threshold scale must be positive");
  if (instance_bytes(cfg) > kInstanceBudgetBytes) {
    fail("codebook needs " + std::to_string(instance_bytes(cfg) / (1024.0 * 1024.0)) + " MiB, over the limit");
  }
}

SimInstance sample_instance(const SimConfig& cfg, std::uint64_t trial) {
  validate(cfg);
  const Layout lay = layout_of(cfg);
  const bool cplx = cfg.ch.complex_valued();
  const int M = 1 << cfg.ch.k();
  SimInstance inst;
  inst.n = cfg.n;
  inst.p = cfg.sections_length();
  inst.M = M;
  const std::size_t p = static_cast<std::size_t>(inst.p);

  {
    CounterRng rng(cfg.master_seed, trial, StreamRole::Codebook);
    std::normal_distribution<double> normal;
    inst.a_re.resize(static_cast<std::size_t>(cfg.n) * p);
    if (cplx) inst.a_im.resize(inst.a_re.size());
    std::vector<double> sd(cfg.base.cols());
    for (int i = 0; i < cfg.n; ++i) {
      const int r = i / lay.rows_per_block;
      for (int c = 0; c < cfg.base.cols(); ++c) {
        const double var = cfg.E * cfg.base(r, c) / lay.rows_per_block;
        sd[c] = std::sqrt(cplx ? 0.5 * var : var);
      }
      double* ar = inst.a_re.data() + static_cast<std::size_t>(i) * p;
      double* ai = cplx ? inst.a_im.data() + static_cast<std::size_t>(i) * p : nullptr;
      for (std::size_t j = 0; j < p; ++j) {
        const double s = sd[j / lay.cols_per_block];
        ar[j] = s * normal(rng);
        if (cplx) ai[j] = s * normal(rng);
      }
    }
  }

  inst.u_re.assign(p, 0.0);
  if (cplx) inst.u_im.assign(p, 0.0);
  inst.support.assign(p, 0);
  inst.messages.resize(cfg.K);
  {
    CounterRng rng(cfg.master_seed, trial, StreamRole::Signal);
    std::uniform_int_distribution<int> pick(0, M - 1);
    for (int u = 0; u < cfg.K; ++u) inst.messages[u] = pick(rng);
  }
  {
    CounterRng rng(cfg.master_seed, trial, StreamRole::Fades);
    std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
    for (int u = 0; u < cfg.K; ++u) {
      const std::size_t j = static_cast<std::size_t>(u) * M + inst.messages[u];
      inst.support[j] = 1;
      if (cplx) {
        inst.u_re[j] = normal(rng);
        inst.u_im[j] = normal(rng);
      } else {
        inst.u_re[j] = 1.0;
      }
    }
  }

  apply(inst, inst.u_re, inst.u_im, inst.y_re, inst.y_im);
  {
    CounterRng rng(cfg.master_seed, trial, StreamRole::Noise);
    std::normal_distribution<double> normal(0.0, cplx ? std::sqrt(0.5) : 1.0);
    for (int i = 0; i < cfg.n; ++i) {
      inst.y_re[i] += normal(rng);
      if (cplx) inst.y_im[i] += normal(rng);
    }
  }
  return inst;
}

AmpOutput amp_run(const SimConfig& cfg, const SimInstance& inst, const SeResult& se, int T) {
  validate(cfg);
  if (!(cfg.E > 0.0)) throw std::invalid_argument("amp_run: E must be positive");
  const int R = cfg.base.rows();
  const int C = cfg.base.cols();
  if (inst.n != cfg.n || inst.p != cfg.sections_length() || inst.complex_valued() != cfg.ch.complex_valued()) {
    throw std::invalid_argument("amp_run: instance dimensions do not match the configuration");
  }
  const int t0 = cfg.init == SeInit::Infinite ? 1 : 0;
  if (T < t0) throw std::invalid_argument("amp_run: T is below the first usable iteration");
  if (static_cast<int>(se.trajectory.size()) <= T) {
    throw std::invalid_argument("amp_run: state evolution trajectory shorter than T + 1");
  }
  for (const auto& s : se.trajectory) {
    if (static_cast<int>(s.phi.size()) != R || static_cast<int>(s.tau.size()) != C) {
      throw std::invalid_argument("amp_run: state evolution was run with a different base matrix");
    }
  }

  const Layout lay = layout_of(cfg);
  const bool cplx = inst.complex_valued();
  const std::size_t p = static_cast<std::size_t>(inst.p);
  const double g = 1.0 / std::sqrt(cfg.E);
  const double mu_eff = cfg.base.rate_penalty() * cfg.mu();

  std::vector<double> ur(p, 0.0), ui(cplx ? p : 0, 0.0);
  if (t0 == 1 && !cplx) std::fill(ur.begin(), ur.end(), cfg.ch.prior_active());

  // z^(t0) = Y/sqrt(E) - A U^(t0)/sqrt(E)
  std::vector<double> zr, zi, tmpr, tmpi;
  apply(inst, ur, ui, tmpr, tmpi);
  zr.resize(inst.n);
  if (cplx) zi.resize(inst.n);
  for (int i = 0; i < inst.n; ++i) {
    zr[i] = g * (inst.y_re[i] - tmpr[i]);
    if (cplx) zi[i] = g * (inst.y_im[i] - tmpi[i]);
  }

  AmpOutput out;
  auto effective = [&](const SeState& s) {
    std::vector<double> wr(inst.n), wi(cplx ? inst.n : 0);
    for (int i = 0; i < inst.n; ++i) {
      const double w = 1.0 / s.phi[i / lay.rows_per_block];
      wr[i] = w * zr[i];
      if (cplx) wi[i] = w * zi[i];
    }
    apply_adjoint(inst, wr, wi, out.obs_re, out.obs_im);
    for (std::size_t j = 0; j < p; ++j) {
      const double scale = g * s.tau[j / lay.cols_per_block];
      out.obs_re[j] = ur[j] + scale * out.obs_re[j];
      if (cplx) out.obs_im[j] = ui[j] + scale * out.obs_im[j];
    }
  };

  for (int t = t0; t < T; ++t) {
    const SeState& now = se.trajectory[t];
    const SeState& next = se.trajectory[t + 1];
    effective(now);
    for (std::size_t j = 0; j < p; ++j) {
      const double tau = now.tau[j / lay.cols_per_block];
      if (cplx) {
        const auto v = denoise_complex(cfg.ch, {out.obs_re[j], out.obs_im[j]}, tau);
        ur[j] = v.real();
        ui[j] = v.imag();
      } else {
        ur[j] = denoise_real(cfg.ch, out.obs_re[j], tau);
      }
    }
    apply(inst, ur, ui, tmpr, tmpi);
    for (int i = 0; i < inst.n; ++i) {
      const int r = i / lay.rows_per_block;
      const double b = mu_eff * next.gamma_scaled[r] / now.phi[r];
      zr[i] = g * (inst.y_re[i] - tmpr[i]) + b * zr[i];
      if (cplx) zi[i] = g * (inst.y_im[i] - tmpi[i]) + b * zi[i];
    }
  }
  effective(se.trajectory[T]);
  out.tau = se.trajectory[T].tau;
  return out;
}

std::vector<std::uint8_t> decode_support(const AmpOutput& out, const std::vector<double>& thresholds, int cols) {
  if (cols < 1 || static_cast<int>(thresholds.size()) != cols || out.obs_re.size() % cols != 0) {
    throw std::invalid_argument("decode_support: thresholds do not match the column blocks");
  }
  const bool cplx = !out.obs_im.empty();
  const std::size_t per = out.obs_re.size() / cols;
  std::vector<std::uint8_t> s(out.obs_re.size());
  for (std::size_t j = 0; j < s.size(); ++j) {
    const double theta = thresholds[j / per];
    const double stat = cplx ? out.obs_re[j] * out.obs_re[j] + out.obs_im[j] * out.obs_im[j] : out.obs_re[j];
    s[j] = stat > theta ? 1 : 0;
  }
  return s;
}

SectionErrors section_error_rate(const std::vector<std::uint8_t>& truth, const std::vector<std::uint8_t>& decoded,
                                 int M) {
  if (M < 1 || truth.size() != decoded.size() || truth.empty() || truth.size() % M != 0) {
    throw std::invalid_argument("section_error_rate: lengths differ or are not a multiple of M");
  }
  const std::size_t sections = truth.size() / M;
  std::size_t bad_sections = 0;
  std::size_t flips = 0;
  for (std::size_t u = 0; u < sections; ++u) {
    bool bad = false;
    for (int m = 0; m < M; ++m) {
      const std::size_t j = u * M + m;
      if (truth[j] != decoded[j]) {
        ++flips;
        bad = true;
      }
    }
    bad_sections += bad ? 1 : 0;
  }
  return {static_cast<double>(bad_sections) / sections, static_cast<double>(flips) / sections};
}

SeResult simulation_state_evolution(const SimConfig& cfg) {
  if (!(cfg.E > 0.0)) throw std::invalid_argument("simulation: E must be positive");
  const SeProblem prob{cfg.ch, cfg.base, cfg.mu(), cfg.E};
  SeRunOptions opt;
  opt.tol = 1e-8;
  opt.init = cfg.init;
  SeResult se = se_run(prob, opt);
  const int need = std::max(cfg.T, cfg.init == SeInit::Infinite ? 1 : 0);
  while (static_cast<int>(se.trajectory.size()) <= need) {
    se.trajectory.push_back(se_step(prob, se.trajectory.back()));
  }
  return se;
}

MonteCarloReport monte_carlo(const SimConfig& cfg) {
  validate(cfg);
  const SeResult se = simulation_state_evolution(cfg);
  MonteCarloReport rep;
  rep.cfg = cfg;
  rep.T = cfg.T > 0 ? cfg.T : static_cast<int>(se.trajectory.size()) - 1;
  if (cfg.init == SeInit::Infinite) rep.T = std::max(rep.T, 1);

  const auto& tau = se.trajectory[rep.T].tau;
  const int C = cfg.base.cols();
  for (double t : tau) rep.thresholds.push_back(cfg.threshold_scale * optimal_threshold(cfg.ch, t));
  rep.predicted_ser = section_error_prediction(cfg.ch, tau, rep.thresholds);
  rep.predicted_pupe = coupled_pupe_prediction(cfg.ch, tau).pupe;

  const Layout lay = layout_of(cfg);
  rep.trials.resize(cfg.trials);
  auto run_trial = [&](std::size_t idx) {
    TrialRecord& rec = rep.trials[idx];
    rec.trial = static_cast<int>(idx);
    try {
      const SimInstance inst = sample_instance(cfg, idx);
      const AmpOutput out = amp_run(cfg, inst, se, rep.T);
      const auto decoded = decode_support(out, rep.thresholds, C);
      const SectionErrors err = section_error_rate(inst.support, decoded, inst.M);
      rec.ser = err.ser;
      rec.m_dh = err.m_dh;
      rec.residual.assign(C, 0.0);
      for (std::size_t j = 0; j < out.obs_re.size(); ++j) {
        const double dr = out.obs_re[j] - inst.u_re[j];
        const double di = inst.complex_valued() ? out.obs_im[j] - inst.u_im[j] : 0.0;
        rec.residual[j / lay.cols_per_block] += dr * dr + di * di;
      }
      for (double& v : rec.residual) v /= static_cast<double>(lay.cols_per_block);

      const std::size_t p = static_cast<std::size_t>(inst.p);
      double energy = 0.0;
      for (int u = 0; u < cfg.K; ++u) {
        const std::size_t j = static_cast<std::size_t>(u) * inst.M + inst.messages[u];
        for (int i = 0; i < inst.n; ++i) {
          const std::size_t at = static_cast<std::size_t>(i) * p + j;
          energy += inst.a_re[at] * inst.a_re[at];
          if (inst.complex_valued()) energy += inst.a_im[at] * inst.a_im[at];
        }
      }
      rec.energy_mean = energy / cfg.K;
      if (!std::isfinite(rec.ser) || !std::isfinite(rec.energy_mean)) {
        throw std::runtime_error("non-finite trial statistics");
      }
    } catch (const std::exception& e) {
      rec.error = e.what();
    }
  };
  const double budget_workers = std::floor(kInstanceBudgetBytes / std::max(1.0, instance_bytes(cfg)));
  if (worker_count() > 1 && budget_workers >= worker_count()) {
    parallel_for(cfg.trials, run_trial);
  } else {
    for (int i = 0; i < cfg.trials; ++i) run_trial(i);
  }

  std::vector<double> ser, mdh, energy;
  std::vector<std::vector<double>> resid(C);
  for (const auto& rec : rep.trials) {
    if (!rec.ok()) {
      ++rep.failed;
      continue;
    }
    ser.push_back(rec.ser);
    mdh.push_back(rec.m_dh);
    energy.push_back(rec.energy_mean);
    if (rec.ser > rec.m_dh) rep.ser_within_bound = false;
    for (int c = 0; c < C; ++c) resid[c].push_back(rec.residual[c]);
  }
  rep.ser_mean = mean_of(ser);
  rep.ser_stderr = stderr_of(ser);
  rep.m_dh_mean = mean_of(mdh);
  rep.energy_mean = mean_of(energy);
  rep.energy_stderr = stderr_of(energy);
  for (int c = 0; c < C; ++c) rep.blocks.push_back({tau[c], mean_of(resid[c]), stderr_of(resid[c])});
  return rep;
}

}  // namespace macbound
