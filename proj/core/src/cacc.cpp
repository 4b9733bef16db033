#include "upsense/cacc.hpp"

#include "upsense/filters.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>

namespace upsense {

namespace {

/// Outer-product grid e^{j m wm} * e^{j g wg}.
Matrix phase_grid(int m_count, int g_count, double wm, double wg) {
  Vector col(m_count), row(g_count);
  for (int m = 0; m < m_count; ++m) col(m) = std::polar(1.0, m * wm);
  for (int g = 0; g < g_count; ++g) row(g) = std::polar(1.0, g * wg);
  return col * row.transpose();
}

std::mutex fftw_plan_mutex;

Matrix fft2(const Matrix& in) {
  // FFTW is row-major; Eigen default is column-major, so plan on the transposed view.
  const int rows = static_cast<int>(in.rows());
  const int cols = static_cast<int>(in.cols());
  Eigen::Matrix<cd, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> buf = in;
  {
    std::lock_guard<std::mutex> lock(fftw_plan_mutex);
    fftw_plan plan = fftw_plan_dft_2d(rows, cols,
                                      reinterpret_cast<fftw_complex*>(buf.data()),
                                      reinterpret_cast<fftw_complex*>(buf.data()),
                                      FFTW_FORWARD, FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);
  }
  return buf;
}

Matrix ifft2(const Matrix& in) {
  const int rows = static_cast<int>(in.rows());
  const int cols = static_cast<int>(in.cols());
  Eigen::Matrix<cd, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> buf = in;
  {
    std::lock_guard<std::mutex> lock(fftw_plan_mutex);
    fftw_plan plan = fftw_plan_dft_2d(rows, cols,
                                      reinterpret_cast<fftw_complex*>(buf.data()),
                                      reinterpret_cast<fftw_complex*>(buf.data()),
                                      FFTW_BACKWARD, FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);
  }
  return buf / static_cast<double>(rows * cols);
}

} // namespace

int strongest_antenna(const RxGrid& rx) {
  int best = 0;
  double best_power = -1.0;
  for (int n = 0; n < rx.num_slices(); ++n) {
    const double p = rx.slices[n].squaredNorm();
    if (p > best_power) {
      best_power = p;
      best = n;
    }
  }
  return best;
}

CaccGrid cacc(const RxGrid& rx, int ref_index) {
  const int n_count = rx.num_slices();
  if (n_count < 2) throw SpecError("CACC needs at least two antennas");
  if (ref_index == kAutoReference) ref_index = strongest_antenna(rx);
  if (ref_index < 0 || ref_index >= n_count) throw SpecError("reference index out of range");

  CaccGrid out;
  const Matrix ref_conj = rx.slices[static_cast<std::size_t>(ref_index)].conjugate();
  for (int n = 0; n < n_count; ++n) {
    if (n == ref_index) continue;
    out.slices.push_back(rx.slices[static_cast<std::size_t>(n)].cwiseProduct(ref_conj));
  }
  return out;
}

ComplexGrid CaccDecomposition::rho2() const {
  ComplexGrid out = rho2_tilde;
  for (int k = 0; k < out.num_slices(); ++k)
    out.slices[static_cast<std::size_t>(k)].array() += rho2_bar[static_cast<std::size_t>(k)];
  return out;
}

XiGrid CaccDecomposition::xi() const {
  XiGrid out = rho3;
  for (std::size_t k = 0; k < out.slices.size(); ++k) out.slices[k] += rho4.slices[k];
  return out;
}

ComplexGrid CaccDecomposition::total() const {
  ComplexGrid out = rho2();
  for (std::size_t k = 0; k < out.slices.size(); ++k) {
    out.slices[k].array() += rho1[k];
    out.slices[k] += rho3.slices[k] + rho4.slices[k];
  }
  return out;
}

double CaccDecomposition::rho2_tilde_mean_power() const {
  return mean_power(rho2_tilde);
}

CaccDecomposition decompose_cacc(const ScenarioConfig& cfg,
                                 const std::vector<PathParams>& paths) {
  cfg.validate();
  validate_paths(cfg, paths);
  const PathParams& los = los_path(paths);
  std::vector<PathParams> nlos;
  for (const auto& p : paths)
    if (!p.is_los) nlos.push_back(p);

  const int m_count = cfg.num_packets;
  const int g_count = cfg.num_subcarriers;
  const int slices = cfg.num_antennas - 1;
  const double t_a = cfg.packet_interval_s;
  const double t_sym = cfg.symbol_period_s();

  CaccDecomposition d;
  d.rho2_tilde = ComplexGrid::zeros(slices, m_count, g_count);
  d.rho3 = ComplexGrid::zeros(slices, m_count, g_count);
  d.rho4 = ComplexGrid::zeros(slices, m_count, g_count);

  for (int k = 0; k < slices; ++k) {
    const int n = k + 1;
    d.rho1.push_back(std::norm(los.gain) * std::polar(1.0, n * los.spatial_freq_rad));
    cd bar(0.0);
    for (const auto& p : nlos)
      bar += std::norm(p.gain) * std::polar(1.0, n * p.spatial_freq_rad);
    d.rho2_bar.push_back(bar);

    auto& r3 = d.rho3.slices[static_cast<std::size_t>(k)];
    auto& r4 = d.rho4.slices[static_cast<std::size_t>(k)];
    for (const auto& p : nlos) {
      const double wf = 2.0 * kPi * t_a * p.doppler_hz;
      const double wtau = -2.0 * kPi * (p.delay_s - los.delay_s) / t_sym;
      // Side product D_n I_0^H: mirrored Doppler/delay, LOS angle.
      r3 += (los.gain * std::conj(p.gain) * std::polar(1.0, n * los.spatial_freq_rad)) *
            phase_grid(m_count, g_count, -wf, -wtau);
      // Actual component I_n D_0^H.
      r4 += (p.gain * std::conj(los.gain) * std::polar(1.0, n * p.spatial_freq_rad)) *
            phase_grid(m_count, g_count, wf, wtau);
    }

    auto& rt = d.rho2_tilde.slices[static_cast<std::size_t>(k)];
    for (std::size_t l = 0; l < nlos.size(); ++l)
      for (std::size_t x = 0; x < nlos.size(); ++x) {
        if (x == l) continue;
        const double wf = 2.0 * kPi * t_a * (nlos[l].doppler_hz - nlos[x].doppler_hz);
        const double wtau = -2.0 * kPi * (nlos[l].delay_s - nlos[x].delay_s) / t_sym;
        rt += (nlos[l].gain * std::conj(nlos[x].gain) *
               std::polar(1.0, n * nlos[l].spatial_freq_rad)) *
              phase_grid(m_count, g_count, wf, wtau);
      }
  }
  return d;
}

HighpassConfig auto_highpass_config(const ScenarioConfig& cfg, double min_abs_doppler_hz,
                                    double min_rel_delay_s) {
  HighpassConfig hp;
  hp.cutoff_doppler_rad = kPi * cfg.packet_interval_s * std::abs(min_abs_doppler_hz);
  hp.cutoff_delay_rad = kPi * min_rel_delay_s / cfg.symbol_period_s();
  return hp;
}

XiGrid highpass_butterworth(const CaccGrid& grid, const HighpassConfig& hp) {
  // Zero-phase 2D Butterworth high-pass realized on the DFT grid. The
  // stopband is the intersection of the two axis stopbands (the DC corner
  // where the low-pass nuisance terms live): the bin multiplier is
  // 1 - (1-|Hm|^2)(1-|Hg|^2), which is exactly zero at DC and leaves tones
  // with energy on either high-frequency axis untouched. A time-domain
  // forward-backward cascade has the same passband response but injects edge
  // transients far above the residual this form achieves.
  const auto sos_m = butterworth_highpass(hp.order, hp.cutoff_doppler_rad);
  const auto sos_g = butterworth_highpass(hp.order, hp.cutoff_delay_rad);
  const int m_count = grid.packets();
  const int g_count = grid.subcarriers();

  Eigen::VectorXd low_m(m_count), low_g(g_count);
  for (int m = 0; m < m_count; ++m)
    low_m(m) = 1.0 - sos_magnitude_sq(sos_m, 2.0 * kPi * m / m_count);
  for (int g = 0; g < g_count; ++g)
    low_g(g) = 1.0 - sos_magnitude_sq(sos_g, 2.0 * kPi * g / g_count);

  XiGrid out;
  out.slices.reserve(grid.slices.size());
  for (const auto& slice : grid.slices) {
    Matrix spec = fft2(slice);
    for (int m = 0; m < m_count; ++m)
      for (int g = 0; g < g_count; ++g) spec(m, g) *= 1.0 - low_m(m) * low_g(g);
    out.slices.push_back(ifft2(spec));
  }
  return out;
}

XiGrid highpass_mean_subtraction(const CaccGrid& grid, int window_packets) {
  const int m_count = grid.packets();
  if (window_packets < 2 || window_packets > m_count)
    throw SpecError("mean-subtraction window must lie in [2, M]");
  XiGrid out;
  out.slices.reserve(grid.slices.size());
  for (const auto& slice : grid.slices) {
    Matrix filtered(slice.rows(), slice.cols());
    for (int m = 0; m < m_count; ++m) {
      // Centred sliding window, clipped at the grid borders. The static
      // component is estimated from the neighbouring packets only: including
      // packet m itself would subtract part of its own noise.
      int lo = m - window_packets / 2;
      int hi = lo + window_packets;
      if (lo < 0) { hi -= lo; lo = 0; }
      if (hi > m_count) { lo -= hi - m_count; hi = m_count; }
      const auto mean =
          (slice.middleRows(lo, hi - lo).colwise().sum() - slice.row(m)) / (hi - lo - 1);
      filtered.row(m) = slice.row(m) - mean;
    }
    out.slices.push_back(std::move(filtered));
  }
  return out;
}

Eigen::MatrixXd spectrum_2d(const ComplexGrid& grid, int slice_index) {
  if (slice_index < 0 || slice_index >= grid.num_slices())
    throw SpecError("spectrum slice index out of range");
  const Matrix spec = fft2(grid.slices[static_cast<std::size_t>(slice_index)]);
  const int rows = static_cast<int>(spec.rows());
  const int cols = static_cast<int>(spec.cols());
  Eigen::MatrixXd mag(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      mag((r + rows / 2) % rows, (c + cols / 2) % cols) = std::abs(spec(r, c));
  return mag;
}

int select_reference_index_n0(const ComplexGrid& grid) {
  if (grid.num_slices() < 1) throw SpecError("empty grid");
  int best = 1;
  double best_energy = std::numeric_limits<double>::infinity();
  for (int k = 0; k < grid.num_slices(); ++k) {
    const Matrix spec = fft2(grid.slices[static_cast<std::size_t>(k)]);
    const int rows = static_cast<int>(spec.rows());
    const int cols = static_cast<int>(spec.cols());
    double energy = 0.0;
    for (int dr : {-1, 0, 1})
      for (int dc : {-1, 0, 1})
        energy += std::norm(spec((dr + rows) % rows, (dc + cols) % cols));
    if (energy < best_energy) {
      best_energy = energy;
      best = k + 1; // slice k holds antenna n = k+1
    }
  }
  return best;
}

double input_error(const ComplexGrid& a, const ComplexGrid& b) {
  if (a.num_slices() != b.num_slices() || a.packets() != b.packets() ||
      a.subcarriers() != b.subcarriers())
    throw SpecError("input_error: shape mismatch");
  double acc = 0.0;
  std::size_t count = 0;
  for (std::size_t k = 0; k < a.slices.size(); ++k) {
    acc += (a.slices[k] - b.slices[k]).squaredNorm();
    count += static_cast<std::size_t>(a.slices[k].size());
  }
  return count ? acc / static_cast<double>(count) : 0.0;
}

double mean_power(const ComplexGrid& grid) {
  double acc = 0.0;
  std::size_t count = 0;
  for (const auto& slice : grid.slices) {
    acc += slice.squaredNorm();
    count += static_cast<std::size_t>(slice.size());
  }
  return count ? acc / static_cast<double>(count) : 0.0;
}

} // namespace upsense
