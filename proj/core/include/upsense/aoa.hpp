#pragma once

#include "upsense/subspace.hpp"
#include "upsense/types.hpp"

namespace upsense {

struct AoAConfig {
  int C = 128;  // enlarged block length; clamped to fit the grid, see effective_C
  int C1 = 10;  // number of extra diagonal C' blocks; C + C1 < min(M, G)
  double peak_threshold_ratio = 0.5;
  int grid_multiplier = 4; // candidate count = grid_multiplier * C * (N-1)
  bool multi_peak = true;  // false: plain single-peak MUSIC per target
  bool refine = true;

  /// Largest feasible block length not exceeding the configured C. The
  /// diagonal block at (C1, C1) must fit inside the M x G grid, and C must
  /// stay below min(G-4L, M-4L).
  int effective_C(int num_targets, int m_count, int g_count) const;

  void validate(int num_targets, int m_count, int g_count, int n_count) const;
  double min_separation_rad(int n_count) const { return 2.0 * kPi / (C * (n_count - 1)); }
};

/// Enlarged basis pair for one target: block i of c1 is steering(Omega) *
/// e^{-j i taubar}; c2 the same with fbar.
struct EnlargedBasisPair {
  Vector c1;
  Vector c2;
};

/// e^{j Omega (1..N-1)}, the CACC-shortened array response.
Vector steering(double omega, int n_count);

/// [xi_1[m,g], ..., xi_{N-1}[m,g]].
Vector spatial_vector_c(const XiGrid& xi, int m, int g);

/// C(N-1) x 2 block: column 1 stacks c[m, g..g+C-1], column 2 stacks
/// c[m..m+C-1, g].
Matrix build_Cprime(const XiGrid& xi, int m, int g, int C);

/// C(N-1) x 2(C1+1) stack of diagonal blocks C'[0,0], C'[1,1], ..., C'[C1,C1].
Matrix assemble_Cmatrix(const XiGrid& xi, const AoAConfig& cfg);

EnlargedBasisPair basis_pair(double omega, double taubar, double fbar, int C, int n_count);

/// Per-target mirrored phase steps for the actual (l' < 0) component:
/// taubar = 2pi (tau_l - tau_0)/T, fbar = -2pi T_A f_D,l, so that the
/// e^{-j i .} block progression of the basis matches xi's phases.
void actual_component_steps(const TargetEstimate& t, double tau0_s, double packet_interval_s,
                            double symbol_period_s, double& taubar, double& fbar);

struct Algorithm2Result {
  std::vector<double> aoas_rad; // one per input target; NaN when unresolved
  std::vector<bool> resolved;
  long candidates_evaluated = 0;
};

/// Multi-domain MUSIC AoA search with the multi-peak ambiguity rule.
/// Only actual-component bases are tested; the LOS basis is excluded.
Algorithm2Result algorithm2(const XiGrid& xi, const EstimateSet& estimates,
                            const AoAConfig& cfg, double tau0_s,
                            const ScenarioConfig& scenario);

} // namespace upsense
