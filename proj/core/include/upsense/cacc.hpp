#pragma once

#include "upsense/model.hpp"

namespace upsense {

inline constexpr int kAutoReference = -1;

/// Analytic four-term CACC decomposition computed directly from path
/// parameters (noiseless). Slice k holds antenna n = k+1.
struct CaccDecomposition {
  std::vector<cd> rho1;      // |alpha_0|^2 e^{jn Omega_0}, per antenna
  std::vector<cd> rho2_bar;  // sum_l |alpha_l|^2 e^{jn Omega_l}, per antenna
  ComplexGrid rho2_tilde;    // cross terms of I_n I_0^H
  ComplexGrid rho3;          // D_n I_0^H
  ComplexGrid rho4;          // I_n D_0^H

  ComplexGrid rho2() const;          // rho2_bar + rho2_tilde
  XiGrid xi() const;                 // rho3 + rho4 (the filter target)
  ComplexGrid total() const;         // rho1 + rho2 + rho3 + rho4
  double rho2_tilde_mean_power() const;
};

/// Cross-antenna cross-correlation rho_n = y_n .* conj(y_ref), n != ref.
/// With ref_index = kAutoReference the antenna with the largest average
/// received power is used; output slice k corresponds to the k+1-th
/// non-reference antenna in index order.
CaccGrid cacc(const RxGrid& rx, int ref_index = 0);

/// Index of the antenna with the largest average |y_n|^2.
int strongest_antenna(const RxGrid& rx);

CaccDecomposition decompose_cacc(const ScenarioConfig& cfg,
                                 const std::vector<PathParams>& paths);

struct HighpassConfig {
  double cutoff_doppler_rad = kPi / 128.0; // omega_f, axis m
  double cutoff_delay_rad = kPi / 128.0;   // omega_tau, axis g
  int order = 4;
};

/// Cutoff rule (min |pi T_A f_D,l|, min pi (tau_l - tau_0)/T) from the
/// configured minimum target dynamics.
HighpassConfig auto_highpass_config(const ScenarioConfig& cfg, double min_abs_doppler_hz,
                                    double min_rel_delay_s);

/// Separable zero-phase 2D Butterworth high-pass along m then g.
XiGrid highpass_butterworth(const CaccGrid& grid, const HighpassConfig& hp);

/// Baseline: per-(n,g) sliding mean over m subtracted. The mean for packet m
/// is taken over the window excluding packet m itself (leave-one-out), so the
/// static estimate never contains the sample's own noise.
XiGrid highpass_mean_subtraction(const CaccGrid& grid, int window_packets);

/// M x G magnitude map of the 2D-FFT of one antenna slice, DC-centred
/// (row M/2, col G/2). Rows follow the Doppler (m) axis, columns the
/// delay (g) axis.
Eigen::MatrixXd spectrum_2d(const ComplexGrid& grid, int slice_index);

/// Reference-slice choice for the mirrored matrices: index n (1-based over
/// CACC slices) whose 2D-FFT has the least energy in the 3x3 DC bin region.
/// Empirical proxy for minimizing |sum_l |alpha_l|^2 e^{j n Omega_l}|^2.
int select_reference_index_n0(const ComplexGrid& grid);

/// Mean squared entrywise deviation between two grids of equal shape.
double input_error(const ComplexGrid& a, const ComplexGrid& b);

double mean_power(const ComplexGrid& grid);

} // namespace upsense
