#include "upsense/subspace.hpp"

#include <Eigen/SVD>

#include <cmath>

namespace upsense {

double SubspaceDecomposition::null_power(const Vector& basis) const {
  if (basis.size() != left_singulars.rows())
    throw SpecError("basis length does not match subspace row count");
  if (null_dim() <= signal_rank) {
    return (basis.adjoint() * null_space()).squaredNorm();
  }
  // Complement identity: ||b^H Ubar||^2 = ||b||^2 - ||b^H Us||^2.
  const double total = basis.squaredNorm();
  const double sig = (basis.adjoint() * left_singulars.leftCols(signal_rank)).squaredNorm();
  return std::max(total - sig, 0.0);
}

SubspaceDecomposition svd_left(const Matrix& mat, int signal_rank) {
  if (!mat.allFinite()) throw SpecError("svd_left: non-finite input");
  if (signal_rank < 0 || signal_rank > mat.rows())
    throw SpecError("svd_left: signal rank out of range");
  Eigen::BDCSVD<Matrix> svd(mat, Eigen::ComputeFullU | Eigen::ComputeThinV);
  SubspaceDecomposition d;
  d.left_singulars = svd.matrixU();
  d.singular_values = svd.singularValues();
  d.right_singulars = svd.matrixV();
  d.signal_rank = signal_rank;
  return d;
}

int estimate_model_order(const RealVector& singular_values, int num_snapshots) {
  const int p = static_cast<int>(singular_values.size());
  if (p < 2) return 1;
  const double n_snap = std::max(num_snapshots, 2);
  // Eigenvalues of the sample covariance.
  RealVector lambda = singular_values.array().square() / n_snap;
  const double floor_val = std::max(lambda(0), 1.0) * 1e-300;

  int best_k = 1;
  double best_mdl = std::numeric_limits<double>::infinity();
  for (int k = 0; k < p; ++k) {
    const int tail = p - k;
    double log_geo = 0.0, arith = 0.0;
    for (int i = k; i < p; ++i) {
      const double v = std::max(lambda(i), floor_val);
      log_geo += std::log(v);
      arith += v;
    }
    log_geo /= tail;
    arith /= tail;
    const double mdl = -n_snap * tail * (log_geo - std::log(std::max(arith, floor_val))) +
                       0.5 * k * (2.0 * p - k) * std::log(n_snap);
    if (mdl < best_mdl) {
      best_mdl = mdl;
      best_k = k;
    }
  }
  return std::clamp(best_k, 1, p - 1);
}

PseudoSpectrum pseudo_spectrum(const SubspaceDecomposition& d, const BasisFn& basis,
                               const std::vector<double>& candidates) {
  if (d.null_dim() <= 0) throw SpecError("pseudo_spectrum: empty null space");
  PseudoSpectrum ps;
  ps.grid = candidates;
  ps.values.reserve(candidates.size());
  for (double c : candidates) {
    const double denom = d.null_power(basis(c));
    ps.values.push_back(denom > 1.0 / kPseudoSpectrumCap ? 1.0 / denom : kPseudoSpectrumCap);
  }
  return ps;
}

PeakSet pick_peaks(const std::vector<double>& values, int k, int min_separation_bins) {
  if (k < 1) throw SpecError("pick_peaks: k must be >= 1");
  const int n = static_cast<int>(values.size());
  std::vector<int> maxima;
  for (int i = 0; i < n; ++i) {
    const bool left_ok = (i == 0) || values[i] >= values[i - 1];
    const bool right_ok = (i == n - 1) || values[i] > values[i + 1];
    if (left_ok && right_ok) maxima.push_back(i);
  }
  std::stable_sort(maxima.begin(), maxima.end(), [&](int a, int b) {
    if (values[a] != values[b]) return values[a] > values[b];
    return a < b;
  });

  PeakSet out;
  for (int idx : maxima) {
    if (static_cast<int>(out.indices.size()) == k) break;
    bool ok = true;
    for (int chosen : out.indices)
      if (std::abs(chosen - idx) < min_separation_bins) ok = false;
    if (ok) out.indices.push_back(idx);
  }
  out.complete = static_cast<int>(out.indices.size()) == k;
  return out;
}

RefinedPeaks select_refined_peaks(const SubspaceDecomposition& dec, const BasisFn& basis,
                                  const std::vector<double>& grid,
                                  const std::vector<double>& values, int k,
                                  double step_omega, bool refine, double lo, double hi) {
  if (k < 1) throw SpecError("select_refined_peaks: k must be >= 1");
  if (grid.size() != values.size())
    throw SpecError("select_refined_peaks: grid/value size mismatch");
  const int n = static_cast<int>(grid.size());
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (values[static_cast<std::size_t>(a)] != values[static_cast<std::size_t>(b)])
      return values[static_cast<std::size_t>(a)] > values[static_cast<std::size_t>(b)];
    return a < b;
  });

  struct Cand {
    double omega;
    double value;
  };
  const int pool = std::min(n, std::max(4 * k, k + 6));
  std::vector<Cand> refined;
  refined.reserve(static_cast<std::size_t>(pool));
  for (int t = 0; t < pool; ++t) {
    double omega = grid[static_cast<std::size_t>(order[static_cast<std::size_t>(t)])];
    double value = values[static_cast<std::size_t>(order[static_cast<std::size_t>(t)])];
    if (refine) {
      omega = golden_section_max([&](double w) { return -dec.null_power(basis(w)); },
                                 std::max(omega - step_omega, lo),
                                 std::min(omega + step_omega, hi));
      const double np = dec.null_power(basis(omega));
      value = np > 1.0 / kPseudoSpectrumCap ? 1.0 / np : kPseudoSpectrumCap;
    }
    refined.push_back({omega, value});
  }
  std::stable_sort(refined.begin(), refined.end(),
                   [](const Cand& a, const Cand& b) { return a.value > b.value; });

  const double tol = 0.1 * step_omega;
  RefinedPeaks out;
  for (const auto& c : refined) {
    if (static_cast<int>(out.omegas.size()) == k) break;
    bool dup = false;
    for (double o : out.omegas)
      if (std::abs(c.omega - o) < tol) dup = true;
    if (!dup) out.omegas.push_back(c.omega);
  }
  out.complete = static_cast<int>(out.omegas.size()) == k;
  return out;
}

double golden_section_max(const std::function<double(double)>& fn, double lo, double hi,
                          int iters) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = fn(c), fd = fn(d);
  for (int i = 0; i < iters; ++i) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = fn(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = fn(d);
    }
  }
  return (a + b) / 2.0;
}

} // namespace upsense
