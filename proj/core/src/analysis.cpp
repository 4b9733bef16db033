#include "upsense/analysis.hpp"

#include "upsense/cacc.hpp"

#include <algorithm>
#include <cmath>

namespace upsense {

double proposition2_objective(const std::vector<PathParams>& paths, int n) {
  cd acc(0.0);
  for (const auto& p : paths)
    acc += std::norm(p.gain) * std::polar(1.0, n * p.spatial_freq_rad);
  return std::norm(acc);
}

PsiVariance psi_variance(const std::vector<PathParams>& paths, int n0, double noise_variance) {
  PsiVariance out;
  // Cross terms of I_n I_0^H over distinct NLOS pairs; phases are
  // independent, so the variance is the sum of squared magnitudes.
  std::vector<const PathParams*> nlos;
  for (const auto& p : paths)
    if (!p.is_los) nlos.push_back(&p);
  for (std::size_t l = 0; l < nlos.size(); ++l)
    for (std::size_t x = 0; x < nlos.size(); ++x) {
      if (x == l) continue;
      out.delta_xi += std::norm(nlos[l]->gain) * std::norm(nlos[x]->gain);
    }
  out.delta_n0 = proposition2_objective(paths, n0);
  out.total = 4.0 * out.delta_xi + 4.0 * out.delta_n0 * noise_variance;
  return out;
}

double predict_peak_variance(const SubspaceDecomposition& signal_dec, const BasisFn& basis,
                             const BasisFn& basis_derivative, double omega_true,
                             double psi_entry_variance) {
  const Matrix u_sig = signal_dec.signal_space();
  const Matrix v_sig = signal_dec.right_singulars.leftCols(signal_dec.signal_rank);
  const RealVector e_sig = signal_dec.singular_values.head(signal_dec.signal_rank);

  const Vector b = basis(omega_true);
  const Vector db = basis_derivative(omega_true);
  const Vector beta = -(v_sig * e_sig.cwiseInverse().asDiagonal() * (u_sig.adjoint() * b));
  const Vector gamma = db - u_sig * (u_sig.adjoint() * db);

  const double denom = db.dot(gamma).real(); // b'^H gamma = ||Ubar^H b'||^2
  if (denom < 1e-12 * db.norm() * gamma.norm())
    throw SpecError("degenerate basis derivative in perturbation predictor");
  return 0.5 * psi_entry_variance * beta.squaredNorm() * gamma.squaredNorm() / (denom * denom);
}

namespace {

Vector basis_p_derivative(double omega, int P) {
  Vector v(P + 1);
  for (int i = 0; i <= P; ++i)
    v(i) = cd(0.0, 1.0) * (double(i) * std::polar(1.0, i * omega) +
                           double(P - i) * std::polar(1.0, (P - i) * omega));
  return v;
}

Vector basis_q_derivative(double omega, int Q) {
  Vector v(Q + 1);
  for (int i = 0; i <= Q; ++i)
    v(i) = cd(0.0, -1.0) * (double(i) * std::polar(1.0, -i * omega) +
                            double(Q - i) * std::polar(1.0, -(Q - i) * omega));
  return v;
}

/// Newton-step linear form: the first-order peak shift is
///   delta = Re tr(beta^H Psi^H gamma) / denom
///         = Re sum_{r,c} conj(W_{r,c}) Psi_{r,c} / denom,  W = gamma beta^H,
/// which is linear in the perturbation matrix Psi. Exposing W lets callers
/// evaluate the shift exactly for a known structured perturbation and
/// propagate per-sample (rather than per-entry) noise variances.
struct NewtonForm {
  Matrix W;     // gamma * beta^H, same shape as the data matrix
  double denom; // Re tr(db^H gamma)
};

NewtonForm newton_form(const SubspaceDecomposition& dec, const Matrix& b, const Matrix& db) {
  const Matrix u = dec.signal_space();
  const Matrix v = dec.right_singulars.leftCols(dec.signal_rank);
  const RealVector e = dec.singular_values.head(dec.signal_rank);
  const Matrix beta = -(v * e.cwiseInverse().asDiagonal() * (u.adjoint() * b));
  const Matrix gamma = db - u * (u.adjoint() * db);
  NewtonForm f;
  f.denom = (db.adjoint() * gamma).trace().real();
  if (f.denom < 1e-12 * db.norm() * gamma.norm())
    throw SpecError("degenerate basis derivative in perturbation predictor");
  f.W = gamma * beta.adjoint();
  return f;
}

double first_order_shift(const NewtonForm& f, const Matrix& psi) {
  return f.W.conjugate().cwiseProduct(psi).sum().real() / f.denom;
}

// The matrices reuse each xi sample in many entries, so independent noise on
// the samples adds coherently along the reuse pattern. These accumulate the
// per-sample weights c_s = sum of W over entries containing sample s; the
// noise variance of the shift is 0.5 * var(sample) * sum_s |c_s|^2 / denom^2.

/// P map: entry (i, m) = psi(m+i, g0) + psi(m+P-i, g0).
double weight_power_p(const Matrix& W, int P, int m_count) {
  Vector c = Vector::Zero(m_count);
  for (int m = 0; m < W.cols(); ++m)
    for (int i = 0; i <= P; ++i) {
      c(m + i) += W(i, m);
      c(m + P - i) += W(i, m);
    }
  return c.squaredNorm();
}

/// Q map: entry (j, g) = psi(m0, g+j) + psi(m0, g+Q-j).
double weight_power_q(const Matrix& W, int Q, int g_count) {
  Vector c = Vector::Zero(g_count);
  for (int g = 0; g < W.cols(); ++g)
    for (int j = 0; j <= Q; ++j) {
      c(g + j) += W(j, g);
      c(g + Q - j) += W(j, g);
    }
  return c.squaredNorm();
}

/// C map: column 2t holds samples (k, t, t+i); column 2t+1 holds (k, t+i, t).
double weight_power_c(const Matrix& W, int C, int C1, int na) {
  const int ext = C1 + C;
  double power = 0.0;
  std::vector<Matrix> c(static_cast<std::size_t>(na), Matrix::Zero(ext, ext));
  for (int t = 0; t <= C1; ++t)
    for (int i = 0; i < C; ++i)
      for (int k = 0; k < na; ++k) {
        c[static_cast<std::size_t>(k)](t, t + i) += W(i * na + k, 2 * t);
        c[static_cast<std::size_t>(k)](t + i, t) += W(i * na + k, 2 * t + 1);
      }
  for (const auto& m : c) power += m.squaredNorm();
  return power;
}

/// Enlarged AoA test basis [c1, c2] and its Omega-derivative as matrices.
void aoa_basis_matrices(double omega, double taubar, double fbar, int C, int n_count,
                        Matrix& ct, Matrix& dct) {
  const EnlargedBasisPair pair = basis_pair(omega, taubar, fbar, C, n_count);
  ct.resize(pair.c1.size(), 2);
  ct.col(0) = pair.c1;
  ct.col(1) = pair.c2;
  dct.resize(ct.rows(), 2);
  const int na = n_count - 1;
  for (int i = 0; i < C; ++i)
    for (int n = 1; n < n_count; ++n) {
      dct(i * na + n - 1, 0) = cd(0.0, double(n)) * ct(i * na + n - 1, 0);
      dct(i * na + n - 1, 1) = cd(0.0, double(n)) * ct(i * na + n - 1, 1);
    }
}

} // namespace

PerturbationReport predict_scene_errors(const ScenarioConfig& cfg,
                                        const std::vector<PathParams>& paths,
                                        const MirrorConfig& mc, const AoAConfig& aoa_cfg,
                                        bool include_aoa) {
  PerturbationReport report;
  const PsiVariance pv = psi_variance(paths, mc.n0, cfg.noise_variance);
  report.delta_xi = pv.delta_xi;
  report.delta_n0 = pv.delta_n0;
  report.psi_entry_variance = pv.total;

  // Mirror the estimation pipeline: both the residual cross terms and the
  // signal pass through the same high-pass stage before the matrices form.
  const auto d = decompose_cacc(cfg, paths);
  const HighpassConfig hp{};
  const XiGrid xi = highpass_butterworth(d.xi(), hp);
  const XiGrid psi_grid = highpass_butterworth(d.rho2_tilde, hp);
  int num_targets = 0;
  for (const auto& p : paths)
    if (!p.is_los) ++num_targets;
  mc.validate(num_targets, cfg.num_packets, cfg.num_subcarriers, cfg.num_antennas);

  const auto pdec = svd_left(assemble_P(xi, mc), num_targets);
  const auto qdec = svd_left(assemble_Q(xi, mc), num_targets);
  const Matrix psi_p = assemble_P(psi_grid, mc);
  const Matrix psi_q = assemble_Q(psi_grid, mc);

  const double t_a = cfg.packet_interval_s;
  const double t_sym = cfg.symbol_period_s();
  const PathParams& los = los_path(paths);

  // Per-sample variance of the CACC noise products I_n w_0* + w_n I_0* + w_n w_0*.
  double total_power = 0.0;
  for (const auto& p : paths) total_power += std::norm(p.gain);
  const double sample_var =
      2.0 * total_power * cfg.noise_variance + cfg.noise_variance * cfg.noise_variance;

  SubspaceDecomposition cdec;
  Matrix psi_c;
  AoAConfig aoa_eff = aoa_cfg;
  if (include_aoa) {
    aoa_cfg.validate(num_targets, cfg.num_packets, cfg.num_subcarriers, cfg.num_antennas);
    aoa_eff.C = aoa_cfg.effective_C(num_targets, cfg.num_packets, cfg.num_subcarriers);
    cdec = svd_left(assemble_Cmatrix(xi, aoa_eff), 4 * num_targets);
    psi_c = assemble_Cmatrix(psi_grid, aoa_eff);
  }

  int counted = 0;
  for (const auto& p : paths) {
    if (p.is_los) continue;
    ++counted;
    const double wf = std::abs(2.0 * kPi * t_a * p.doppler_hz);
    const double wtau = 2.0 * kPi * (p.delay_s - los.delay_s) / t_sym;

    const NewtonForm fp = newton_form(pdec, basis_p(wf, mc.P), basis_p_derivative(wf, mc.P));
    const double bias_wf = first_order_shift(fp, psi_p);
    const double noise_wf = 0.5 * sample_var * weight_power_p(fp.W, mc.P, cfg.num_packets) /
                            (fp.denom * fp.denom);
    report.predicted_var_doppler_hz2 +=
        (bias_wf * bias_wf + noise_wf) / std::pow(2.0 * kPi * t_a, 2);

    const NewtonForm fq =
        newton_form(qdec, basis_q(wtau, mc.Q), basis_q_derivative(wtau, mc.Q));
    const double bias_wtau = first_order_shift(fq, psi_q);
    const double noise_wtau = 0.5 * sample_var *
                              weight_power_q(fq.W, mc.Q, cfg.num_subcarriers) /
                              (fq.denom * fq.denom);
    report.predicted_var_delay_s2 +=
        (bias_wtau * bias_wtau + noise_wtau) * std::pow(t_sym / (2.0 * kPi), 2);

    if (include_aoa) {
      TargetEstimate t;
      t.delay_rel_s = p.delay_s - los.delay_s;
      t.doppler_hz = p.doppler_hz;
      double taubar, fbar;
      actual_component_steps(t, los.delay_s, t_a, t_sym, taubar, fbar);
      Matrix ct, dct;
      aoa_basis_matrices(p.spatial_freq_rad, taubar, fbar, aoa_eff.C, cfg.num_antennas, ct,
                         dct);
      const NewtonForm fc = newton_form(cdec, ct, dct);
      const double bias = first_order_shift(fc, psi_c);
      const double noise = 0.5 * sample_var *
                           weight_power_c(fc.W, aoa_eff.C, aoa_eff.C1, cfg.num_antennas - 1) /
                           (fc.denom * fc.denom);
      // Beyond the linear regime the prediction saturates at the variance of
      // a uniformly distributed angle on (-pi, pi].
      const double cap = kPi * kPi / 3.0;
      if (bias * bias + noise > cap) report.aoa_prediction_saturated = true;
      report.predicted_var_aoa_rad2 += std::min(bias * bias + noise, cap);
    }
  }
  if (counted > 0) {
    report.predicted_var_doppler_hz2 /= counted;
    report.predicted_var_delay_s2 /= counted;
    report.predicted_var_aoa_rad2 /= counted;
  }
  return report;
}

} // namespace upsense
