#include "helpers.hpp"
#include "upsense/analysis.hpp"

#include <doctest.h>

#include <random>

using namespace upsense;

TEST_CASE("closed-form Psi variance pieces") {
  ScenarioConfig cfg = testing::small_config();
  auto paths = testing::fixed_scene(cfg);

  SUBCASE("LOS only") {
    std::vector<PathParams> los{paths[0]};
    const auto pv = psi_variance(los, 1, 0.25);
    CHECK(pv.delta_xi == 0.0);
    CHECK(pv.delta_n0 == doctest::Approx(std::pow(std::abs(los[0].gain), 4)));
    CHECK(pv.total == doctest::Approx(4.0 * pv.delta_n0 * 0.25));
  }
  SUBCASE("noiseless total is 4 delta_xi") {
    const auto pv = psi_variance(paths, 1, 0.0);
    CHECK(pv.total == doctest::Approx(4.0 * pv.delta_xi));
    // Ordered-pair sum over three equal-power targets: 6 * 0.1 * 0.1.
    CHECK(pv.delta_xi == doctest::Approx(0.06).epsilon(1e-9));
  }
  SUBCASE("delta_xi equals the measured cross-term power") {
    const auto d = decompose_cacc(cfg, paths);
    const auto pv = psi_variance(paths, 1, 0.0);
    CHECK(pv.delta_xi == doctest::Approx(d.rho2_tilde_mean_power()).epsilon(0.05));
  }
}

TEST_CASE("proposition-2 objective") {
  ScenarioConfig cfg = testing::small_config();

  SUBCASE("single path: no n preference") {
    std::vector<PathParams> los{make_path(cfg, cd(0.8, 0.0), 0.02e-6, 0.0, 1.0, true)};
    for (int n = 1; n < 4; ++n)
      CHECK(proposition2_objective(los, n) == doctest::Approx(std::pow(0.8, 4)));
  }
  SUBCASE("two equal paths with pi phase difference cancel at n=1") {
    std::vector<PathParams> paths;
    paths.push_back(make_path(cfg, cd(1.0, 0.0), 0.02e-6, 0.0, 1.0, true));
    paths.push_back(make_path(cfg, cd(1.0, 0.0), 0.1e-6, 100.0, 1.0));
    paths[0].spatial_freq_rad = 0.0;
    paths[1].spatial_freq_rad = kPi;
    CHECK(proposition2_objective(paths, 1) < 1e-20);
    CHECK(proposition2_objective(paths, 2) == doctest::Approx(4.0));
  }
}

TEST_CASE("perturbation predictor matches a Monte-Carlo peak-error oracle") {
  // Planted single component in a mirrored-style matrix; perturb with i.i.d.
  // complex Gaussian entries of known variance; compare the empirical peak
  // variance against the Newton-step formula.
  const int P = 24, cols = 48;
  const double omega_true = 1.1;
  auto basis = [&](double w) { return basis_p(w, P); };
  auto dbasis = [&](double w) {
    Vector v(P + 1);
    for (int i = 0; i <= P; ++i)
      v(i) = cd(0.0, 1.0) * (double(i) * std::polar(1.0, i * w) +
                             double(P - i) * std::polar(1.0, (P - i) * w));
    return v;
  };

  Matrix clean(P + 1, cols);
  for (int c = 0; c < cols; ++c)
    clean.col(c) = std::polar(1.0, c * omega_true) * basis(omega_true);
  const auto clean_dec = svd_left(clean, 1);

  const double entry_var = 1e-4;
  const double predicted = predict_peak_variance(clean_dec, basis, dbasis, omega_true,
                                                 entry_var);

  std::mt19937_64 rng(77);
  std::normal_distribution<double> g(0.0, std::sqrt(entry_var / 2.0));
  double sq = 0.0;
  const int trials = 300;
  for (int t = 0; t < trials; ++t) {
    Matrix noisy = clean;
    for (int r = 0; r <= P; ++r)
      for (int c = 0; c < cols; ++c) noisy(r, c) += cd(g(rng), g(rng));
    const auto dec = svd_left(noisy, 1);
    // Local peak search around the truth.
    const double w_hat = golden_section_max(
        [&](double w) { return -dec.null_power(basis(w)); }, omega_true - 0.05,
        omega_true + 0.05);
    sq += (w_hat - omega_true) * (w_hat - omega_true);
  }
  const double empirical = sq / trials;
  CHECK(empirical / predicted > 0.5);
  CHECK(empirical / predicted < 2.0);
}

TEST_CASE("scene predictor returns finite per-axis variances") {
  ScenarioConfig cfg = testing::small_config();
  cfg.noise_variance = 0.01;
  auto paths = testing::fixed_scene(cfg);
  MirrorConfig mc;
  mc.P = 32;
  mc.Q = 64;
  AoAConfig acfg;
  acfg.C = 24;
  acfg.C1 = 6;

  const auto rep = predict_scene_errors(cfg, paths, mc, acfg, true);
  CHECK(rep.predicted_var_doppler_hz2 > 0.0);
  CHECK(rep.predicted_var_delay_s2 > 0.0);
  CHECK(rep.predicted_var_aoa_rad2 > 0.0);
  CHECK(std::isfinite(rep.predicted_var_doppler_hz2));
  CHECK(std::isfinite(rep.predicted_var_delay_s2));
  CHECK(std::isfinite(rep.predicted_var_aoa_rad2));
  // More noise -> larger predicted errors.
  ScenarioConfig louder = cfg;
  louder.noise_variance = 0.1;
  const auto rep2 = predict_scene_errors(louder, paths, mc, acfg, false);
  CHECK(rep2.predicted_var_doppler_hz2 > rep.predicted_var_doppler_hz2);
  CHECK(rep2.predicted_var_delay_s2 > rep.predicted_var_delay_s2);
}
