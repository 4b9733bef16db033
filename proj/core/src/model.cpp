#include "upsense/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace upsense {

void ScenarioConfig::validate() const {
  if (num_antennas < 2) throw SpecError("num_antennas must be >= 2");
  if (num_packets < 2) throw SpecError("num_packets must be >= 2");
  if (num_subcarriers < 2) throw SpecError("num_subcarriers must be >= 2");
  if (bandwidth_hz <= 0) throw SpecError("bandwidth must be positive");
  if (cp_period_s <= 0 || cp_period_s >= symbol_period_s())
    throw SpecError("cp_period must satisfy 0 < T_C < T");
  if (noise_variance < 0) throw SpecError("noise_variance must be >= 0");
  if (packet_interval_s <= 0) throw SpecError("packet_interval must be positive");
  if (antenna_spacing_ratio <= 0) throw SpecError("antenna_spacing_ratio must be positive");
}

OffsetTrace generate_offsets(const ScenarioConfig& cfg, const OffsetModel& model, Rng& rng) {
  cfg.validate();
  const int m_count = cfg.num_packets;
  OffsetTrace trace = OffsetTrace::zeros(m_count);

  if (model.to == ToModel::PerPacketUniform) {
    const double range = model.to_range_s >= 0 ? model.to_range_s : 0.1 * cfg.cp_period_s;
    std::uniform_real_distribution<double> to_dist(0.0, range);
    for (int m = 0; m < m_count; ++m) trace.timing_offset_s(m) = to_dist(rng);
  }

  switch (model.cfo) {
    case CfoModel::None:
      break;
    case CfoModel::Constant: {
      double value = model.cfo_hz;
      if (std::isnan(value)) {
        const double ppm = 1e-6 * cfg.carrier_freq_hz;
        value = std::uniform_real_distribution<double>(-ppm, ppm)(rng);
      }
      trace.cfo_hz.setConstant(value);
      break;
    }
    case CfoModel::RandomWalk: {
      std::uniform_real_distribution<double> step(-model.walk_step_hz, model.walk_step_hz);
      double acc = 0.0;
      for (int m = 0; m < m_count; ++m) {
        acc += step(rng);
        trace.cfo_hz(m) = acc;
      }
      break;
    }
  }
  return trace;
}

SymbolGrid generate_symbols(const ScenarioConfig& cfg, Rng& rng) {
  cfg.validate();
  SymbolGrid grid;
  grid.x.resize(cfg.num_packets, cfg.num_subcarriers);
  std::uniform_int_distribution<int> quad(0, 3);
  const double scale = 1.0 / std::sqrt(2.0);
  for (int m = 0; m < cfg.num_packets; ++m)
    for (int g = 0; g < cfg.num_subcarriers; ++g) {
      const int q = quad(rng);
      grid.x(m, g) = cd((q & 1) ? -scale : scale, (q & 2) ? -scale : scale);
    }
  return grid;
}

const PathParams& los_path(const std::vector<PathParams>& paths) {
  for (const auto& p : paths)
    if (p.is_los) return p;
  throw SpecError("no LOS path in scene");
}

void validate_paths(const ScenarioConfig& cfg, const std::vector<PathParams>& paths) {
  if (paths.empty()) throw SpecError("path list is empty");
  int los_count = 0;
  for (const auto& p : paths) {
    if (p.is_los) {
      ++los_count;
      if (p.doppler_hz != 0.0) throw SpecError("LOS path must have zero Doppler");
    }
    if (p.delay_s < 0 || p.delay_s >= cfg.cp_period_s)
      throw SpecError("path delay must lie in [0, T_C)");
  }
  if (los_count != 1) throw SpecError("scene must contain exactly one LOS path");
}

RxGrid equalize_symbols(const RxGrid& rx, const SymbolGrid& symbols) {
  if (symbols.x.rows() != rx.packets() || symbols.x.cols() != rx.subcarriers())
    throw SpecError("symbol grid shape does not match the received grid");
  RxGrid out;
  out.slices.reserve(rx.slices.size());
  const Matrix conj_x = symbols.x.conjugate();
  for (const auto& slice : rx.slices) out.slices.push_back(slice.cwiseProduct(conj_x));
  return out;
}

double noise_variance_for_snr_db(const std::vector<PathParams>& paths, double snr_db) {
  const double los_power = std::norm(los_path(paths).gain);
  return los_power / std::pow(10.0, snr_db / 10.0);
}

RxGrid synthesize_rx(const ScenarioConfig& cfg, const std::vector<PathParams>& paths,
                     const OffsetTrace& offsets, const SymbolGrid& symbols, Rng& rng) {
  cfg.validate();
  validate_paths(cfg, paths);
  const int n_count = cfg.num_antennas;
  const int m_count = cfg.num_packets;
  const int g_count = cfg.num_subcarriers;
  if (offsets.timing_offset_s.size() != m_count || offsets.cfo_hz.size() != m_count)
    throw SpecError("offset trace length does not match packet count");
  if (symbols.x.rows() != m_count || symbols.x.cols() != g_count)
    throw SpecError("symbol grid shape does not match scenario");
  for (const auto& p : paths) {
    const double max_to = offsets.timing_offset_s.size()
                              ? offsets.timing_offset_s.cwiseAbs().maxCoeff()
                              : 0.0;
    if (p.delay_s + max_to >= cfg.cp_period_s)
      throw SpecError("delay plus timing offset exceeds CP period");
  }

  const double t_sym = cfg.symbol_period_s();
  const double t_a = cfg.packet_interval_s;

  RxGrid rx = RxGrid::zeros(n_count, m_count, g_count);
  Matrix per_path(m_count, g_count);
  for (const auto& p : paths) {
    // Per-(m,g) factor shared across antennas.
    for (int m = 0; m < m_count; ++m) {
      const cd time_phase =
          std::polar(1.0, 2.0 * kPi * m * t_a * (p.doppler_hz + offsets.cfo_hz(m)));
      const double total_delay = p.delay_s + offsets.timing_offset_s(m);
      const cd step = std::polar(1.0, -2.0 * kPi * total_delay / t_sym);
      cd freq_phase(1.0, 0.0);
      for (int g = 0; g < g_count; ++g) {
        per_path(m, g) = time_phase * freq_phase;
        freq_phase *= step;
      }
    }
    for (int n = 0; n < n_count; ++n) {
      const cd ant = p.gain * std::polar(1.0, n * p.spatial_freq_rad);
      rx.slices[n].noalias() += ant * per_path.cwiseProduct(symbols.x);
    }
  }

  if (cfg.noise_variance > 0.0) {
    std::normal_distribution<double> gauss(0.0, std::sqrt(cfg.noise_variance / 2.0));
    for (int n = 0; n < n_count; ++n)
      for (int m = 0; m < m_count; ++m)
        for (int g = 0; g < g_count; ++g)
          rx.slices[n](m, g) += cd(gauss(rng), gauss(rng));
  }
  return rx;
}

namespace {

bool separated(const std::vector<double>& values, double cand, double min_sep) {
  for (double v : values)
    if (std::abs(v - cand) < min_sep) return false;
  return true;
}

} // namespace

std::vector<PathParams> make_random_paths(const ScenarioConfig& cfg,
                                          const SceneConstraints& sc, Rng& rng) {
  std::uniform_real_distribution<double> uni01(0.0, 1.0);
  std::uniform_real_distribution<double> phase(-kPi, kPi);

  std::vector<PathParams> paths;
  paths.push_back(make_path(cfg, cd(1.0, 0.0), sc.los_delay_s, 0.0,
                            std::uniform_real_distribution<double>(0.1, kPi - 0.1)(rng),
                            /*is_los=*/true));

  const double nlos_amp = std::pow(10.0, -cfg.los_nlos_gap_db / 20.0);
  std::vector<double> delays, dopplers;
  for (int l = 0; l < sc.num_targets; ++l) {
    double delay = 0.0, doppler = 0.0;
    for (int attempt = 0;; ++attempt) {
      if (attempt > 10000) throw SpecError("could not draw a separated random scene");
      delay = sc.los_delay_s + sc.min_delay_sep_s +
              uni01(rng) * (sc.delay_max_s - sc.los_delay_s - sc.min_delay_sep_s);
      if (separated(delays, delay, sc.min_delay_sep_s)) break;
    }
    for (int attempt = 0;; ++attempt) {
      if (attempt > 10000) throw SpecError("could not draw a separated random scene");
      const double mag = sc.min_abs_doppler_hz +
                         uni01(rng) * (sc.doppler_max_hz - sc.min_abs_doppler_hz);
      doppler = (uni01(rng) < 0.5 ? -1.0 : 1.0) * mag;
      if (separated(dopplers, std::abs(doppler), sc.min_doppler_sep_hz)) break;
    }
    delays.push_back(delay);
    dopplers.push_back(std::abs(doppler));
    const cd gain = std::polar(nlos_amp, phase(rng));
    const double aoa = std::uniform_real_distribution<double>(0.1, kPi - 0.1)(rng);
    paths.push_back(make_path(cfg, gain, delay, doppler, aoa));
  }
  return paths;
}

namespace {

void write_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw SpecError("truncated grid file");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

void write_f64(std::ostream& os, double d) {
  std::uint64_t bits;
  static_assert(sizeof(bits) == sizeof(d));
  std::memcpy(&bits, &d, sizeof(bits));
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 8);
}

double read_f64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  if (!is) throw SpecError("truncated grid file");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  double d;
  std::memcpy(&d, &bits, sizeof(d));
  return d;
}

} // namespace

void dump_rxgrid(const ComplexGrid& grid, std::ostream& os) {
  write_u32(os, static_cast<std::uint32_t>(grid.num_slices()));
  write_u32(os, static_cast<std::uint32_t>(grid.packets()));
  write_u32(os, static_cast<std::uint32_t>(grid.subcarriers()));
  for (const auto& slice : grid.slices)
    for (int m = 0; m < slice.rows(); ++m)
      for (int g = 0; g < slice.cols(); ++g) {
        write_f64(os, slice(m, g).real());
        write_f64(os, slice(m, g).imag());
      }
}

ComplexGrid load_rxgrid(std::istream& is) {
  const int n = static_cast<int>(read_u32(is));
  const int m_count = static_cast<int>(read_u32(is));
  const int g_count = static_cast<int>(read_u32(is));
  if (n <= 0 || m_count <= 0 || g_count <= 0 || n > 4096)
    throw SpecError("implausible grid header");
  ComplexGrid grid = ComplexGrid::zeros(n, m_count, g_count);
  for (auto& slice : grid.slices)
    for (int m = 0; m < m_count; ++m)
      for (int g = 0; g < g_count; ++g) {
        const double re = read_f64(is);
        const double im = read_f64(is);
        slice(m, g) = cd(re, im);
      }
  return grid;
}

void dump_rxgrid_file(const ComplexGrid& grid, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw SpecError("cannot open " + path + " for writing");
  dump_rxgrid(grid, os);
}

ComplexGrid load_rxgrid_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw SpecError("cannot open " + path);
  return load_rxgrid(is);
}

} // namespace upsense
