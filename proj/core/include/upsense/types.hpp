#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace upsense {

using cd = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

inline constexpr double kPi = 3.141592653589793238462643383279502884;

/// Full OFDM / array / timing parameterization of one simulated run.
struct ScenarioConfig {
  double carrier_freq_hz = 3e9;
  int num_subcarriers = 256;       // G
  double bandwidth_hz = 128e6;
  double cp_period_s = 0.4e-6;     // T_C
  double packet_interval_s = 1e-3; // T_A
  int num_packets = 128;           // M
  int num_antennas = 4;            // N
  double antenna_spacing_ratio = 0.5; // d / lambda
  double noise_variance = 0.0;     // sigma^2, linear power
  double los_nlos_gap_db = 10.0;
  std::uint64_t rng_seed = 1;

  // Subcarrier spacing is 1/T, so T = G / bandwidth.
  double symbol_period_s() const { return num_subcarriers / bandwidth_hz; }

  void validate() const;

  /// Desk-scale defaults: G=256, 128 MHz, M=128, N=4, T_A=1 ms, 10 dB LOS gap.
  static ScenarioConfig desk_defaults() { return ScenarioConfig{}; }
};

/// One propagation path: LOS (l=0) or a target-reflected NLOS path.
struct PathParams {
  cd gain{1.0, 0.0};        // alpha, linear amplitude
  double delay_s = 0.0;     // tau
  double doppler_hz = 0.0;  // f_D, signed
  double aoa_rad = kPi / 2; // theta in (0, pi)
  double spatial_freq_rad = 0.0; // Omega = 2*pi*(d/lambda)*cos(theta)
  bool is_los = false;
};

inline double spatial_freq_from_aoa(double aoa_rad, double spacing_ratio) {
  return 2.0 * kPi * spacing_ratio * std::cos(aoa_rad);
}

inline PathParams make_path(const ScenarioConfig& cfg, cd gain, double delay_s,
                            double doppler_hz, double aoa_rad, bool is_los = false) {
  PathParams p;
  p.gain = gain;
  p.delay_s = delay_s;
  p.doppler_hz = doppler_hz;
  p.aoa_rad = aoa_rad;
  p.spatial_freq_rad = spatial_freq_from_aoa(aoa_rad, cfg.antenna_spacing_ratio);
  p.is_los = is_los;
  return p;
}

/// Per-packet clock-asynchrony offsets between UE and BS.
struct OffsetTrace {
  RealVector timing_offset_s; // delta_tau(m), length M
  RealVector cfo_hz;          // delta_f(m), length M

  static OffsetTrace zeros(int num_packets) {
    OffsetTrace t;
    t.timing_offset_s = RealVector::Zero(num_packets);
    t.cfo_hz = RealVector::Zero(num_packets);
    return t;
  }
};

/// Unit-modulus transmitted symbols x[m,g], M x G.
struct SymbolGrid {
  Matrix x;
};

/// Complex tensor indexed [antenna](packet m, subcarrier g).
/// Used for the received grid (N slices) and CACC-derived grids (N-1 slices,
/// slice k holding antenna index k+1).
struct ComplexGrid {
  std::vector<Matrix> slices;

  int num_slices() const { return static_cast<int>(slices.size()); }
  int packets() const { return slices.empty() ? 0 : static_cast<int>(slices[0].rows()); }
  int subcarriers() const { return slices.empty() ? 0 : static_cast<int>(slices[0].cols()); }

  static ComplexGrid zeros(int n, int m, int g) {
    ComplexGrid out;
    out.slices.assign(static_cast<std::size_t>(n), Matrix::Zero(m, g));
    return out;
  }
};

using RxGrid = ComplexGrid;   // N x M x G, y_n[m,g]
using CaccGrid = ComplexGrid; // (N-1) x M x G, rho_n[m,g], n = 1..N-1
using XiGrid = ComplexGrid;   // (N-1) x M x G, xi_n[m,g]

/// One detected target after pair matching and sign recovery.
struct TargetEstimate {
  double delay_rel_s = 0.0; // tau_l - tau_0
  double delay_abs_s = 0.0; // tau_l
  double doppler_hz = 0.0;  // signed
  double aoa_rad = 0.0;     // Omega estimate, filled by the AoA stage
  bool aoa_resolved = false;
  double pair_score = 0.0;  // |P_xi| of the matched pair
};

struct EstimateSet {
  std::vector<TargetEstimate> targets;
  bool complete = true; // false when fewer separated peaks than requested
};

struct SpecError : std::runtime_error {
  explicit SpecError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace upsense
