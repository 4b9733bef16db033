#pragma once

#include "upsense/types.hpp"

#include <iosfwd>
#include <limits>
#include <random>

namespace upsense {

using Rng = std::mt19937_64;

enum class ToModel { None, PerPacketUniform };
enum class CfoModel { None, Constant, RandomWalk };

struct OffsetModel {
  ToModel to = ToModel::PerPacketUniform;
  CfoModel cfo = CfoModel::Constant;
  // TO redrawn each packet, uniform over [0, to_range_s).
  // Negative sentinel means "0.1 * T_C".
  double to_range_s = -1.0;
  // Constant CFO value; NaN means "draw uniform within +/- 1 ppm of carrier".
  double cfo_hz = std::numeric_limits<double>::quiet_NaN();
  double walk_step_hz = 1.0; // random-walk increment std-like bound (uniform +/-)
};

OffsetTrace generate_offsets(const ScenarioConfig& cfg, const OffsetModel& model, Rng& rng);

/// QPSK preamble symbols, unit modulus by construction.
SymbolGrid generate_symbols(const ScenarioConfig& cfg, Rng& rng);

/// Frequency-domain received grid:
///   y_n[m,g] = sum_l alpha_l e^{jn Omega_l} e^{j2pi m T_A (f_D,l + df(m))}
///              e^{-j2pi (g/T)(tau_l + dtau(m))} x[m,g] + z_n[m,g]
RxGrid synthesize_rx(const ScenarioConfig& cfg, const std::vector<PathParams>& paths,
                     const OffsetTrace& offsets, const SymbolGrid& symbols, Rng& rng);

void validate_paths(const ScenarioConfig& cfg, const std::vector<PathParams>& paths);

/// Remove the known unit-modulus symbols: y .* conj(x) per antenna. Needed by
/// consumers that average over packets (the symbols do not cancel there).
RxGrid equalize_symbols(const RxGrid& rx, const SymbolGrid& symbols);

const PathParams& los_path(const std::vector<PathParams>& paths);

/// SNR referenced to the LOS path: SNR_dB = 10 log10(|alpha_0|^2 / sigma^2).
double noise_variance_for_snr_db(const std::vector<PathParams>& paths, double snr_db);

/// Constraints for random scene draws (see SceneSampler).
struct SceneConstraints {
  int num_targets = 3;          // L
  double delay_max_s = 0.4e-6;  // NLOS delays drawn over (los_delay, delay_max)
  double los_delay_s = 0.02e-6; // tau_0
  double doppler_max_hz = 300.0;
  double min_abs_doppler_hz = 30.0; // keep targets out of the filter transition band
  double min_delay_sep_s = 25e-9;   // pairwise separation of relative delays
  double min_doppler_sep_hz = 25.0; // pairwise separation of |f_D|
};

/// Random multipath scene: one LOS path plus L NLOS paths with the configured
/// LOS/NLOS power gap, uniform phases, AoAs uniform in (0, pi).
std::vector<PathParams> make_random_paths(const ScenarioConfig& cfg,
                                          const SceneConstraints& sc, Rng& rng);

// --- External interfaces -------------------------------------------------

/// Binary tensor dump: little-endian u32 N, M, G header, then interleaved
/// re/im doubles, antenna-major, packet, subcarrier.
void dump_rxgrid(const ComplexGrid& grid, std::ostream& os);
ComplexGrid load_rxgrid(std::istream& is);
void dump_rxgrid_file(const ComplexGrid& grid, const std::string& path);
ComplexGrid load_rxgrid_file(const std::string& path);

} // namespace upsense
