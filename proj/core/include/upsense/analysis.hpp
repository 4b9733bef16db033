#pragma once

#include "upsense/aoa.hpp"
#include "upsense/mirrored_music.hpp"
#include "upsense/subspace.hpp"
#include "upsense/types.hpp"

namespace upsense {

struct PsiVariance {
  double delta_xi = 0.0; // var of the rho2 cross terms, closed form
  double delta_n0 = 0.0; // |sum_l |alpha_l|^2 e^{j n0 Omega_l}|^2
  double total = 0.0;    // 4*delta_xi + 4*delta_n0*sigma^2
};

/// Closed-form entry variance of the perturbation block Psi.
PsiVariance psi_variance(const std::vector<PathParams>& paths, int n0, double noise_variance);

/// Objective of the reference-antenna rule: |sum_l |alpha_l|^2 e^{j n Omega_l}|^2.
double proposition2_objective(const std::vector<PathParams>& paths, int n);

/// First-order (single Newton step) perturbation variance of the peak
/// location, in the basis parameter's own units (omega, rad/sample):
///   var = 0.5 * sigma_psi^2 * ||beta||^2 ||gamma||^2 / |b'(w)^H gamma|^2
/// The decomposition must come from the signal-only (analytic) matrix.
double predict_peak_variance(const SubspaceDecomposition& signal_dec, const BasisFn& basis,
                             const BasisFn& basis_derivative, double omega_true,
                             double psi_entry_variance);

struct PerturbationReport {
  double predicted_var_doppler_hz2 = 0.0;
  double predicted_var_delay_s2 = 0.0;
  double predicted_var_aoa_rad2 = 0.0;
  double psi_entry_variance = 0.0;
  double delta_xi = 0.0;
  double delta_n0 = 0.0;
  // True when some target's AoA prediction exceeded the uniform-angle
  // variance bound and was clamped: the linearization is not trustworthy.
  bool aoa_prediction_saturated = false;
};

/// Predictors for a whole scene, averaged over the NLOS targets, using the
/// analytic (noiseless) xi grid for the signal-only decompositions.
PerturbationReport predict_scene_errors(const ScenarioConfig& cfg,
                                        const std::vector<PathParams>& paths,
                                        const MirrorConfig& mc, const AoAConfig& aoa_cfg,
                                        bool include_aoa = true);

} // namespace upsense
