#pragma once

#include "macbound/scalar_channel.hpp"

#include <vector>

namespace macbound {

struct SystemParams {
  double mu;  ///< users per channel use
  double E;   ///< total energy per codeword
  ChannelModel ch;
};

void validate(const SystemParams& p);

struct LandscapeSample {
  double tau;
  double F;
  bool is_min = false;
};

struct LocalMinimum {
  double tau;
  double F;
  double basin_lo;  ///< bracket handed to the refinement
  double basin_hi;
  bool at_boundary = false;
};

struct PotentialLandscape {
  std::vector<LandscapeSample> samples;
  std::vector<LocalMinimum> minima;
  double global_argmin_max = 0.0;
  bool tie = false;            ///< two or more minima within the tie tolerance
  bool boundary_min = false;   ///< infimum approached at tau -> 1/E
};

/// mu * (M I) + c (ln tau + 1/(tau E) - 1), c = 1/2 real, 1 complex.
double potential_value(const SystemParams& p, double tau);

struct LandscapeOptions {
  int grid_points = 2048;
  double refine_rel_tol = 1e-10;
  double tie_rel_tol = 1e-9;
};

PotentialLandscape global_minimizer(const SystemParams& p, const LandscapeOptions& opt = {});

/// All roots of tau = 1/E + mu * Mmmse(tau) on (1/E, 1/E + mu], ascending.
std::vector<double> uncoupled_fixed_points(const SystemParams& p);

/// tau - 1/E - mu * Mmmse(tau), evaluated by direct quadrature.
double fixed_point_residual(const SystemParams& p, double tau);

}  // namespace macbound
