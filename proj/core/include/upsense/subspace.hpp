#pragma once

#include "upsense/types.hpp"

#include <functional>

namespace upsense {

struct SubspaceDecomposition {
  Matrix left_singulars;      // full U, orthonormal columns
  RealVector singular_values; // nonincreasing
  Matrix right_singulars;     // thin V
  int signal_rank = 0;

  Matrix signal_space() const { return left_singulars.leftCols(signal_rank); }
  Matrix null_space() const {
    return left_singulars.rightCols(left_singulars.cols() - signal_rank);
  }
  int null_dim() const { return static_cast<int>(left_singulars.cols()) - signal_rank; }

  /// ||basis^H Ubar||_F^2, evaluated through whichever subspace is smaller.
  double null_power(const Vector& basis) const;
};

/// Full left-singular decomposition with the requested signal rank.
SubspaceDecomposition svd_left(const Matrix& mat, int signal_rank);

/// Classical MDL model-order estimate from sorted singular values,
/// clamped to [1, len-1].
int estimate_model_order(const RealVector& singular_values, int num_snapshots);

struct PseudoSpectrum {
  std::vector<double> grid;   // candidate parameter values
  std::vector<double> values; // 1 / ||basis(c)^H Ubar||^2, capped
};

inline constexpr double kPseudoSpectrumCap = 1e12;

using BasisFn = std::function<Vector(double)>;

PseudoSpectrum pseudo_spectrum(const SubspaceDecomposition& d, const BasisFn& basis,
                               const std::vector<double>& candidates);

struct PeakSet {
  std::vector<int> indices; // greedy by magnitude
  bool complete = true;
};

/// k largest local maxima, each at least min_separation_bins away from
/// previously chosen ones. Ties break toward the lower index.
PeakSet pick_peaks(const std::vector<double>& values, int k, int min_separation_bins);

/// Golden-section maximization of a unimodal objective on [lo, hi].
double golden_section_max(const std::function<double(double)>& fn, double lo, double hi,
                          int iters = 60);

struct RefinedPeaks {
  std::vector<double> omegas; // sorted by objective value, descending
  bool complete = true;
};

/// Top-k spectrum peaks with refinement-based deduplication: the strongest
/// grid candidates (not just local maxima, so peaks in adjacent bins
/// survive) are each refined over +/- one grid step; refined positions that
/// coincide collapse to the best one. Bounds are clamped to [lo, hi].
RefinedPeaks select_refined_peaks(const SubspaceDecomposition& dec, const BasisFn& basis,
                                  const std::vector<double>& grid,
                                  const std::vector<double>& values, int k,
                                  double step_omega, bool refine, double lo, double hi);

} // namespace upsense
