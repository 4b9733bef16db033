#include "upsense/filters.hpp"

#include <cmath>

namespace upsense {

std::vector<Biquad> butterworth_highpass(int order, double cutoff_rad) {
  if (order < 1 || order % 2 != 0)
    throw SpecError("butterworth order must be a positive even number");
  if (cutoff_rad <= 0.0 || cutoff_rad >= kPi)
    throw SpecError("cutoff must lie in (0, pi)");

  // Analog low-pass prototype poles on the unit circle (left half-plane),
  // transformed low-pass -> high-pass (s -> wc/s), then bilinear.
  const double wc = std::tan(cutoff_rad / 2.0);
  std::vector<Biquad> sos;
  for (int k = 0; k < order / 2; ++k) {
    const double theta = kPi * (2.0 * k + 1.0 + order) / (2.0 * order);
    const cd p_lp = std::polar(1.0, theta);
    const cd p_hp = wc / p_lp;
    const cd zp = (1.0 + p_hp) / (1.0 - p_hp); // bilinear z-pole
    // Conjugate pair -> real denominator; both zeros of a HP section sit at z = 1.
    Biquad s;
    s.a1 = -2.0 * zp.real();
    s.a2 = std::norm(zp);
    // Normalize to unit gain at Nyquist (z = -1): numerator (1,-2,1) evaluates to 4.
    const double den_nyq = 1.0 - s.a1 + s.a2;
    const double g = den_nyq / 4.0;
    s.b0 = g;
    s.b1 = -2.0 * g;
    s.b2 = g;
    sos.push_back(s);
  }
  return sos;
}

double sos_magnitude_sq(const std::vector<Biquad>& sos, double omega) {
  const cd z = std::polar(1.0, -omega);
  cd h(1.0, 0.0);
  for (const auto& s : sos) {
    const cd num = s.b0 + s.b1 * z + s.b2 * z * z;
    const cd den = 1.0 + s.a1 * z + s.a2 * z * z;
    h *= num / den;
  }
  return std::norm(h);
}

namespace {

void run_sos_forward(const std::vector<Biquad>& sos, Vector& x) {
  for (const auto& s : sos) {
    // Steady-state initial conditions for a constant input equal to the first
    // sample, so step-like content produces no start-up transient.
    const double y_ss = (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
    cd w1 = ((s.b1 + s.b2) - (s.a1 + s.a2) * y_ss) * x(0);
    cd w2 = (s.b2 - s.a2 * y_ss) * x(0);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const cd in = x(i);
      const cd out = s.b0 * in + w1;
      w1 = s.b1 * in - s.a1 * out + w2;
      w2 = s.b2 * in - s.a2 * out;
      x(i) = out;
    }
  }
}

} // namespace

Vector filtfilt(const std::vector<Biquad>& sos, const Vector& x) {
  const Eigen::Index n = x.size();
  if (n < 2) return x;
  // Pad long enough for the slowest pole's transient to decay by ~e^-9,
  // capped by the signal length.
  double r_max = 0.0;
  for (const auto& s : sos) r_max = std::max(r_max, std::sqrt(std::max(s.a2, 0.0)));
  Eigen::Index pad = 3 * (2 * static_cast<Eigen::Index>(sos.size()) + 1);
  if (r_max > 0.0 && r_max < 1.0)
    pad = std::max(pad, static_cast<Eigen::Index>(std::ceil(-9.0 / std::log(r_max))));
  pad = std::min(pad, n - 1);

  // Odd extension around both endpoints.
  Vector ext(n + 2 * pad);
  for (Eigen::Index i = 0; i < pad; ++i) ext(i) = 2.0 * x(0) - x(pad - i);
  ext.segment(pad, n) = x;
  for (Eigen::Index i = 0; i < pad; ++i) ext(pad + n + i) = 2.0 * x(n - 1) - x(n - 2 - i);

  run_sos_forward(sos, ext);
  ext.reverseInPlace();
  run_sos_forward(sos, ext);
  ext.reverseInPlace();
  return ext.segment(pad, n);
}

Matrix filtfilt_columns(const std::vector<Biquad>& sos, const Matrix& x) {
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c) out.col(c) = filtfilt(sos, x.col(c));
  return out;
}

Matrix filtfilt_rows(const std::vector<Biquad>& sos, const Matrix& x) {
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r)
    out.row(r) = filtfilt(sos, Vector(x.row(r).transpose())).transpose();
  return out;
}

} // namespace upsense
