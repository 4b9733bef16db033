#pragma once

#include "upsense/subspace.hpp"
#include "upsense/types.hpp"

namespace upsense {

/// Window/index configuration for the mirrored matrices.
struct MirrorConfig {
  int P = 64;  // L <= P < M - L
  int Q = 128; // L <= Q < G - L
  int n0 = 1;  // antenna index in [1, N-1]; matches CACC slice n0-1
  int m0 = 0;
  int g0 = 0;

  void validate(int num_targets, int m_count, int g_count, int n_count) const;
};

struct SearchOptions {
  bool refine = true;     // golden-section pass around each coarse peak
  int min_separation_bins = 2;
};

struct AxisEstimates {
  std::vector<double> values; // |f_D| in Hz or tau_l - tau_0 in seconds
  bool complete = true;
  long candidates_evaluated = 0;
};

// --- Mirrored vectors and bases ------------------------------------------

/// Packet-axis slice plus its reverse: entry i equals entry P-i exactly.
Vector mirrored_vector_p(const XiGrid& xi, int n0, int m, int g0, int P);
/// Subcarrier-axis analog.
Vector mirrored_vector_q(const XiGrid& xi, int n0, int m0, int g, int Q);

/// Palindromic basis e^{j(m+i)w} + e^{j(m+P-i)w}, i = 0..P.
Vector basis_p(double omega, int P, int m = 0);
/// Palindromic basis e^{-j(g+i)w} + e^{-j(g+Q-i)w}, i = 0..Q.
Vector basis_q(double omega, int Q, int g = 0);

Vector doppler_basis(double f_hz, double packet_interval_s, int P);
Vector delay_basis(double tau_s, double symbol_period_s, int Q);

Matrix assemble_P(const XiGrid& xi, const MirrorConfig& mc);
Matrix assemble_Q(const XiGrid& xi, const MirrorConfig& mc);

/// (m0, g0) with the largest mean |xi_n[m,g]|^2 across antennas.
void choose_m0_g0(const XiGrid& xi, MirrorConfig& mc);

// --- Peak searches --------------------------------------------------------

/// L Doppler magnitudes from the decomposed P matrix. Grid step
/// 1/(T_A(P+1)); the scan covers (0, 1/(2 T_A)) — by mirror symmetry the
/// upper half of (0, 1/T_A) repeats the same value sequence.
AxisEstimates estimate_dopplers_abs(const SubspaceDecomposition& pdec, int num_targets,
                                    double packet_interval_s, int P,
                                    const SearchOptions& opt = {});

/// L relative delays from the decomposed Q matrix, scan over (0, T/2),
/// grid step T/(Q+1).
AxisEstimates estimate_delays_rel(const SubspaceDecomposition& qdec, int num_targets,
                                  double symbol_period_s, int Q,
                                  const SearchOptions& opt = {});

// --- Pair matching and sign recovery --------------------------------------

/// Coherent combining gain P_xi: triple sum of xi_n[m,g] with phases
/// (+m 2pi T_A f, -g (2pi/T)(tau - tau_0), -n Omega_0). Peaks when the
/// signed candidate pair matches one target.
cd combine_gain_Pxi(const XiGrid& xi, double f_hz, double tau_abs_s, double omega0,
                    double tau0_s, double packet_interval_s, double symbol_period_s);

/// Algorithm-1 greedy pairing: evaluate all remaining signed pairs, take
/// max |P_xi|, fix the sign, drop the matched row/column plus the mirrored
/// sign candidate; repeat L times.
EstimateSet pair_and_sign(const std::vector<double>& dopplers_abs,
                          const std::vector<double>& delays_rel, const XiGrid& xi,
                          double omega0, double tau0_s, double packet_interval_s,
                          double symbol_period_s);

struct Algorithm1Result {
  EstimateSet estimates;
  long candidates_evaluated = 0; // pseudo-spectrum evaluations, both axes
};

/// End-to-end mirrored-MUSIC on a filtered (or analytic) xi grid.
Algorithm1Result algorithm1(const XiGrid& xi, double omega0, double tau0_s,
                            const ScenarioConfig& cfg, MirrorConfig mc, int num_targets,
                            const SearchOptions& opt = {});

} // namespace upsense
