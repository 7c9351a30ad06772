#pragma once

#include "macbound/scalar_channel.hpp"
#include "macbound/state_evolution.hpp"

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace macbound {

/// Stream roles; each (seed, trial, role) triple owns an independent stream.
enum class StreamRole : std::uint64_t { Codebook = 0, Signal = 1, Fades = 2, Noise = 3 };

/// splitmix64 over a counter. Satisfies UniformRandomBitGenerator.
class CounterRng {
 public:
  using result_type = std::uint64_t;
  CounterRng(std::uint64_t seed, std::uint64_t trial, StreamRole role);
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()();

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

struct SimConfig {
  ChannelModel ch{ChannelKind::Awgn, 4};
  int n = 4320;
  int K = 432;
  BaseMatrix base{3, 16, 0.0};
  double E = 100.0;
  int T = 0;  ///< AMP iterations; 0 picks the first t where SE has settled to 1e-8
  int trials = 1;
  std::uint64_t master_seed = 1;
  SeInit init = SeInit::ZeroEstimate;
  double threshold_scale = 1.0;  ///< multiplies every theta_c*

  double mu() const { return static_cast<double>(K) / n; }
  long long sections_length() const;  ///< p = K M
};

/// Checks k <= 12, divisibility and memory limits; throws std::invalid_argument.
void validate(const SimConfig& cfg);

struct SimInstance {
  int n = 0;
  long long p = 0;
  int M = 0;
  std::vector<double> a_re;  ///< n x p, row-major
  std::vector<double> a_im;  ///< empty for the real channel
  std::vector<double> u_re;
  std::vector<double> u_im;
  std::vector<std::uint8_t> support;
  std::vector<int> messages;  ///< per user
  std::vector<double> y_re;
  std::vector<double> y_im;
  bool complex_valued() const { return !a_im.empty(); }
};

SimInstance sample_instance(const SimConfig& cfg, std::uint64_t trial);

struct AmpOutput {
  std::vector<double> obs_re;  ///< effective observation U + sqrt(tau_c) W
  std::vector<double> obs_im;
  std::vector<double> tau;  ///< SE noise level of the effective observation per block
};

/// Runs T iterations of coupled scalar AMP with SE-derived weights and
/// returns the final effective observation.
AmpOutput amp_run(const SimConfig& cfg, const SimInstance& inst, const SeResult& se, int T);

/// 1[obs > theta] for the real channel, 1[|obs|^2 > theta] for the complex one.
std::vector<std::uint8_t> decode_support(const AmpOutput& out, const std::vector<double>& thresholds, int cols);

struct SectionErrors {
  double ser;   ///< fraction of sections with any mismatch
  double m_dh;  ///< M times the normalized Hamming distance
};

SectionErrors section_error_rate(const std::vector<std::uint8_t>& truth, const std::vector<std::uint8_t>& decoded,
                                 int M);

struct TrialRecord {
  int trial = 0;
  double ser = 0.0;
  double m_dh = 0.0;
  double energy_mean = 0.0;        ///< mean squared norm of the transmitted columns
  std::vector<double> residual;    ///< per block mean |obs - U|^2
  std::string error;               ///< empty when the trial succeeded
  bool ok() const { return error.empty(); }
};

struct BlockCheck {
  double tau_se;
  double residual_mean;
  double residual_stderr;
};

struct MonteCarloReport {
  SimConfig cfg;
  int T = 0;
  std::vector<TrialRecord> trials;
  double ser_mean = 0.0;
  double ser_stderr = 0.0;
  double m_dh_mean = 0.0;
  double energy_mean = 0.0;
  double energy_stderr = 0.0;
  double predicted_ser = 0.0;   ///< (1/C) sum_c M psi(tau_c, theta_c)
  double predicted_pupe = 0.0;  ///< bound form: pi* or 2 eps* averaged over blocks
  std::vector<double> thresholds;
  std::vector<BlockCheck> blocks;
  bool ser_within_bound = true;  ///< SER <= M d_H on every trial
  int failed = 0;
};

/// SE trajectory for the simulated system (mu = K/n), run to tol 1e-8.
SeResult simulation_state_evolution(const SimConfig& cfg);

MonteCarloReport monte_carlo(const SimConfig& cfg);

}  // namespace macbound
