#pragma once

#include "upsense/types.hpp"

#include <array>

namespace upsense {

/// Second-order section with normalized a0 = 1.
struct Biquad {
  double b0, b1, b2;
  double a1, a2;
};

/// Digital Butterworth high-pass as cascaded biquads.
/// cutoff_rad is the -3 dB frequency in (0, pi) rad/sample.
std::vector<Biquad> butterworth_highpass(int order, double cutoff_rad);

/// |H(e^{jw})|^2 of the cascade.
double sos_magnitude_sq(const std::vector<Biquad>& sos, double omega);

/// Zero-phase forward-backward filtering with odd-reflect edge padding.
Vector filtfilt(const std::vector<Biquad>& sos, const Vector& x);

/// Apply filtfilt along every column (axis m) of a packet x subcarrier matrix.
Matrix filtfilt_columns(const std::vector<Biquad>& sos, const Matrix& x);
/// Apply filtfilt along every row (axis g).
Matrix filtfilt_rows(const std::vector<Biquad>& sos, const Matrix& x);

} // namespace upsense
