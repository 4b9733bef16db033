// Acceptance suite: one pass/fail line per criterion, desk-scale
// configuration (G=256, M=128, N=4, L=3, T_A=1 ms, 10 dB LOS gap).
#include "upsense/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <string>
#include <vector>

using namespace upsense;

namespace {

int g_failures = 0;

void report(int index, const char* name, bool pass, const std::string& detail) {
  std::printf("criterion %d [%s] %s: %s\n", index, pass ? "PASS" : "FAIL", name,
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

/// Per-trial delay NMSE with misses counted as full-truth-power errors.
double trial_delay_nmse(const TrialOutcome& t) {
  if (t.sq_truth_delay_s2 <= 0.0 || t.match.targets == 0) return 1.0;
  const double miss = t.sq_truth_delay_s2 *
                      double(t.match.targets - t.match.matched) / t.match.targets;
  return (t.match.sq_delay_s2 + miss) / t.sq_truth_delay_s2;
}

std::vector<double> nmse_per_trial(const ExperimentResult& r, Method m, double snr) {
  std::vector<double> out;
  for (const auto& t : r.rows)
    if (t.method == m && t.snr_db == snr) out.push_back(trial_delay_nmse(t));
  return out;
}

// --- Criterion 1: noiseless oracle exactness -------------------------------

void criterion1() {
  ScenarioConfig cfg;
  SceneConstraints sc;
  MirrorConfig mc;
  const double half_dop = 0.5 / (cfg.packet_interval_s * (mc.P + 1));
  const double half_del = 0.5 * cfg.symbol_period_s() / (mc.Q + 1);

  int ok_scenes = 0;
  const int scenes = 100;
  for (int s = 0; s < scenes; ++s) {
    Rng rng(derive_seed(42, 1, s));
    const auto paths = make_random_paths(cfg, sc, rng);
    const XiGrid xi = decompose_cacc(cfg, paths).xi();
    const auto r = algorithm1(xi, paths[0].spatial_freq_rad, paths[0].delay_s, cfg, mc, 3);
    if (r.estimates.targets.size() != 3) continue;
    std::vector<bool> used(3, false);
    int hit = 0;
    for (std::size_t l = 1; l < paths.size(); ++l) {
      int best = -1;
      double best_d = 1e300;
      for (int e = 0; e < 3; ++e) {
        if (used[e]) continue;
        const auto& t = r.estimates.targets[e];
        const double dd = std::abs(t.delay_rel_s - (paths[l].delay_s - paths[0].delay_s));
        const double df = std::abs(t.doppler_hz - paths[l].doppler_hz);
        if (dd < half_del && df < half_dop && dd / half_del + df / half_dop < best_d) {
          best = e;
          best_d = dd / half_del + df / half_dop;
        }
      }
      if (best >= 0) {
        used[best] = true;
        ++hit;
      }
    }
    if (hit == 3) ++ok_scenes;
  }
  report(1, "oracle exactness", ok_scenes == scenes,
         fmt("%d/%d scenes with all delays/signed Dopplers within half a grid step",
             ok_scenes, scenes));
}

// --- Criterion 2: rank properties ------------------------------------------

void criterion2() {
  ScenarioConfig cfg;
  SceneConstraints sc;
  Rng rng(derive_seed(42, 2, 0));
  const auto paths = make_random_paths(cfg, sc, rng);
  const XiGrid xi = decompose_cacc(cfg, paths).xi();
  MirrorConfig mc;
  const int L = 3;

  const auto pdec = svd_left(assemble_P(xi, mc), L);
  const auto qdec = svd_left(assemble_Q(xi, mc), L);
  const double rp = pdec.singular_values(L) / pdec.singular_values(0);
  const double rq = qdec.singular_values(L) / qdec.singular_values(0);

  AoAConfig acfg;
  acfg.C = acfg.effective_C(L, cfg.num_packets, cfg.num_subcarriers);
  const auto cdec = svd_left(assemble_Cmatrix(xi, acfg), 4 * L);
  const double rc = cdec.singular_values(4 * L) / cdec.singular_values(0);

  const bool pass = rp < 1e-6 && rq < 1e-6 && rc < 1e-6;
  report(2, "rank property", pass,
         fmt("sigma ratios P=%.1e Q=%.1e C=%.1e (all < 1e-6 required)", rp, rq, rc));
}

// --- Criterion 3: method ordering and error floor --------------------------

void criterion3() {
  ExperimentSpec spec;
  spec.include_aoa = false;
  spec.scene.delay_max_s = 0.3e-6;
  spec.trials = 200;
  spec.master_seed = 303;

  spec.methods = {Method::Mirrored, Method::Conventional, Method::Ams};
  spec.snr_db = {20.0};
  const auto at20 = run_experiment(spec);
  const double m20 = median(nmse_per_trial(at20, Method::Mirrored, 20.0));
  const double c20 = median(nmse_per_trial(at20, Method::Conventional, 20.0));
  const double a20 = median(nmse_per_trial(at20, Method::Ams, 20.0));

  spec.methods = {Method::Mirrored};
  spec.snr_db = {0.0, 5.0, 25.0, 30.0};
  const auto sweep = run_experiment(spec);
  const double m0 = median(nmse_per_trial(sweep, Method::Mirrored, 0.0));
  const double m5 = median(nmse_per_trial(sweep, Method::Mirrored, 5.0));
  const double m25 = median(nmse_per_trial(sweep, Method::Mirrored, 25.0));
  const double m30 = median(nmse_per_trial(sweep, Method::Mirrored, 30.0));
  const double imp_low = 10.0 * std::log10(m0 / m5);
  const double imp_high = 10.0 * std::log10(m25 / m30);

  const bool ordering = m20 < c20 && c20 < a20;
  const bool floor = imp_high < 0.25 * imp_low;
  report(3, "method ordering and error floor", ordering && floor,
         fmt("median delay NMSE at 20 dB: mirrored=%.2e conv=%.2e ams=%.2e; "
             "improvement 0->5 dB=%.2f dB, 25->30 dB=%.2f dB",
             m20, c20, a20, imp_low, imp_high));
}

// --- Criterion 4: filter MSE behavior --------------------------------------

void criterion4() {
  ScenarioConfig base;
  const std::vector<double> snrs{0, 5, 10, 15, 20, 25, 30};
  const int seeds = 6;

  auto sweep = [&](int num_targets, std::vector<double>& butter_db,
                   std::vector<double>& meansub_db, double& floor_db) {
    SceneConstraints sc;
    sc.num_targets = num_targets;
    sc.delay_max_s = 0.3e-6;
    double floor_acc = 0.0;
    for (std::size_t si = 0; si < snrs.size(); ++si) {
      double mb = 0.0, mm = 0.0;
      for (int seed = 0; seed < seeds; ++seed) {
        Rng rng(derive_seed(404, num_targets * 100 + int(si), seed));
        ScenarioConfig cfg = base;
        const auto paths = make_random_paths(cfg, sc, rng);
        cfg.noise_variance = noise_variance_for_snr_db(paths, snrs[si]);
        const SymbolGrid sym = generate_symbols(cfg, rng);
        const OffsetTrace off = generate_offsets(cfg, OffsetModel{}, rng);
        const RxGrid rx = synthesize_rx(cfg, paths, off, sym, rng);
        const CaccGrid rho = cacc(rx, 0);
        const auto d = decompose_cacc(cfg, paths);
        const XiGrid want = d.xi();
        mb += input_error(highpass_butterworth(rho, HighpassConfig{}), want);
        mm += input_error(highpass_mean_subtraction(rho, 33), want);
        if (si == 0) floor_acc += d.rho2_tilde_mean_power();
      }
      butter_db.push_back(10.0 * std::log10(mb / seeds));
      meansub_db.push_back(10.0 * std::log10(mm / seeds));
    }
    floor_db = 10.0 * std::log10(std::max(floor_acc / seeds, 1e-300));
  };

  std::vector<double> b1, m1, b3, m3;
  double floor1_db = 0.0, floor3_db = 0.0;
  sweep(1, b1, m1, floor1_db);
  sweep(3, b3, m3, floor3_db);

  // Least-squares slope of the L=1 Butterworth curve, dB per dB of SNR.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < snrs.size(); ++i) {
    sx += snrs[i];
    sy += b1[i];
    sxx += snrs[i] * snrs[i];
    sxy += snrs[i] * b1[i];
  }
  const double n = double(snrs.size());
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);

  bool butter_wins = true;
  for (std::size_t i = 0; i < snrs.size(); ++i)
    if (b1[i] > m1[i] || b3[i] > m3[i]) butter_wins = false;
  const double floor_gap = std::abs(b3.back() - floor3_db);

  const bool pass = std::abs(slope + 1.0) <= 0.2 && floor_gap <= 3.0 && butter_wins;
  report(4, "filter MSE behavior", pass,
         fmt("L=1 slope=%.2f dB/dB (want -1.0 +/- 0.2); L=3 MSE at 30 dB=%.1f dB vs "
             "analytic floor=%.1f dB (gap %.1f <= 3); Butterworth <= mean-sub at all "
             "SNRs: %s",
             slope, b3.back(), floor3_db, floor_gap, butter_wins ? "yes" : "no"));
}

// --- Criterion 5: reference-antenna rule and Psi variance ------------------

void criterion5() {
  ScenarioConfig base;
  SceneConstraints sc;
  sc.delay_max_s = 0.3e-6;
  MirrorConfig mc;

  std::vector<double> nmse_best, nmse_worst;
  double emp_acc = 0.0, formula_acc = 0.0;
  const int scenes = 50;
  const int draws = 8; // NMSE per scene averaged over independent noise draws
  int used_scenes = 0;
  for (int s = 0; s < scenes; ++s) {
    Rng scene_rng(derive_seed(505, 0, s));
    ScenarioConfig cfg = base;
    const auto paths = make_random_paths(cfg, sc, scene_rng);
    cfg.noise_variance = noise_variance_for_snr_db(paths, 10.0);
    int best_n = 1, worst_n = 1;
    for (int nidx = 1; nidx < cfg.num_antennas; ++nidx) {
      if (proposition2_objective(paths, nidx) < proposition2_objective(paths, best_n))
        best_n = nidx;
      if (proposition2_objective(paths, nidx) > proposition2_objective(paths, worst_n))
        worst_n = nidx;
    }
    double acc_best = 0.0, acc_worst = 0.0;
    for (int k = 0; k < draws; ++k) {
      Rng rng(derive_seed(505, 1 + k, s));
      const SymbolGrid sym = generate_symbols(cfg, rng);
      const OffsetTrace off = generate_offsets(cfg, OffsetModel{}, rng);
      const RxGrid rx = synthesize_rx(cfg, paths, off, sym, rng);
      const CaccGrid rho = cacc(rx, 0);
      const XiGrid xi_hat = highpass_butterworth(rho, HighpassConfig{});

      auto nmse_for = [&](int n0) {
        MirrorConfig m = mc;
        m.n0 = n0;
        const auto r = algorithm1(xi_hat, paths[0].spatial_freq_rad, paths[0].delay_s,
                                  cfg, m, 3);
        const auto st = match_targets(paths, r.estimates, cfg);
        double truth = 0.0;
        for (const auto& p : paths)
          if (!p.is_los) truth += std::pow(p.delay_s - paths[0].delay_s, 2);
        const double miss = truth * double(st.targets - st.matched) / st.targets;
        return (st.sq_delay_s2 + miss) / truth;
      };
      if (best_n != worst_n) {
        acc_best += nmse_for(best_n);
        acc_worst += nmse_for(worst_n);
      }

      if (k == 0) {
        // Empirical Psi: mirrored stack of (CACC - rho1 - rho2bar - rho3 -
        // rho4), i.e. rho2tilde plus the CACC noise products (Appendix-C
        // definition).
        const auto d = decompose_cacc(cfg, paths);
        XiGrid pert;
        const ComplexGrid total = d.total();
        for (std::size_t a = 0; a < rho.slices.size(); ++a)
          pert.slices.push_back(rho.slices[a] - total.slices[a] + d.rho2_tilde.slices[a]);
        const Matrix psi = assemble_P(pert, mc);
        emp_acc += psi.squaredNorm() / psi.size();
        formula_acc += psi_variance(paths, mc.n0, cfg.noise_variance).total;
      }
    }
    if (best_n != worst_n) {
      nmse_best.push_back(acc_best / draws);
      nmse_worst.push_back(acc_worst / draws);
      ++used_scenes;
    }
  }
  const double mb = median(nmse_best);
  const double mw = median(nmse_worst);
  const double ratio = emp_acc / formula_acc;
  const bool pass = mb <= mw && std::abs(ratio - 1.0) <= 0.2;
  report(5, "reference-antenna rule and Psi variance", pass,
         fmt("median delay NMSE best-n0=%.2e vs worst-n0=%.2e (%d scenes); empirical / "
             "formula Psi variance = %.3f (want within 20%%)",
             mb, mw, used_scenes, ratio));
}

// --- Criterion 6: perturbation-theory match --------------------------------

void criterion6() {
  ExperimentSpec spec;
  spec.include_aoa = true;
  spec.predict = true;
  spec.scene.delay_max_s = 0.3e-6;
  spec.trials = 120;
  spec.snr_db = {15.0, 20.0, 25.0};
  spec.master_seed = 606;
  const auto result = run_experiment(spec);

  bool pass = true;
  std::string detail;
  // Per-scene squared errors are heavy-tailed (a few scenes sit outside the
  // linear-perturbation regime on both the simulated and the predicted side),
  // so the typical-scene match is compared through medians over trials.
  for (double snr : spec.snr_db) {
    std::vector<double> sim_dop, sim_del, sim_aoa, pred_dop, pred_del, pred_aoa;
    for (const auto& t : result.rows) {
      if (t.snr_db != snr) continue;
      if (t.match.matched > 0) {
        sim_dop.push_back(t.match.sq_doppler_hz2 / t.match.matched);
        sim_del.push_back(t.match.sq_delay_s2 / t.match.matched);
      }
      if (t.match.aoa_counted > 0)
        sim_aoa.push_back(t.match.sq_aoa_rad2 / t.match.aoa_counted);
      pred_dop.push_back(t.predicted_var_doppler_hz2);
      pred_del.push_back(t.predicted_var_delay_s2);
      pred_aoa.push_back(t.predicted_var_aoa_rad2);
    }
    const double rd = median(sim_dop) / median(pred_dop);
    const double rt = median(sim_del) / median(pred_del);
    const double ra = std::sqrt(median(sim_aoa) / median(pred_aoa));
    const double lim = std::pow(10.0, 0.3); // 3 dB
    if (rd > lim || rd < 1.0 / lim || rt > lim || rt < 1.0 / lim) pass = false;
    if (snr >= 20.0 && (ra > 2.0 || ra < 0.5)) pass = false;
    detail += fmt("[%g dB: dop x%.2f del x%.2f aoa-rmse x%.2f] ", snr, rd, rt, ra);
  }
  report(6, "theoretical error predictors", pass,
         detail + "(delay/Doppler variance ratios within 3 dB; AoA RMSE ratio within "
                  "2x at >= 20 dB)");
}

// --- Criterion 7: ROC trends -----------------------------------------------

void criterion7() {
  ExperimentSpec spec;
  spec.include_aoa = false;
  spec.scene.delay_max_s = 0.3e-6;
  spec.trials = 200;
  spec.snr_db = {-10, -5, 0, 5, 10, 15, 20};
  spec.master_seed = 707;
  const auto result = run_experiment(spec);
  const auto roc = roc_curve(result, Method::Mirrored);

  const double n_per_point = 3.0 * spec.trials;
  const double slack = 2.0 * std::sqrt(0.25 * 2.0 / n_per_point);
  bool monotone = true;
  for (std::size_t i = 0; i + 1 < roc.size(); ++i) {
    if (roc[i + 1].pd < roc[i].pd - slack) monotone = false;
    if (roc[i + 1].pfa > roc[i].pfa + slack) monotone = false;
  }
  const double gain = roc.back().pd - roc.front().pd;
  const bool pass = monotone && gain >= 0.5;
  std::string curve;
  for (const auto& pt : roc) curve += fmt("(%g: %.2f/%.2f) ", pt.snr_db, pt.pd, pt.pfa);
  report(7, "ROC trends", pass,
         fmt("Pd/Pfa by SNR %s; Pd gain -10->20 dB = %.2f (>= 0.5); monotone within "
             "2 sigma: %s",
             curve.c_str(), gain, monotone ? "yes" : "no"));
}

// --- Criterion 8: complexity -----------------------------------------------

void criterion8() {
  ExperimentSpec spec;
  spec.include_aoa = false;
  spec.scene.delay_max_s = 0.3e-6;
  spec.master_seed = 808;
  const auto cmp = bench_candidate_counts(spec, 5);
  const bool pass = cmp.conventional_candidates == 2 * cmp.mirrored_candidates &&
                    cmp.conventional_ms > cmp.mirrored_ms;
  report(8, "search complexity", pass,
         fmt("candidates mirrored=%ld conventional=%ld (exact 2x); wall time "
             "mirrored=%.1f ms conventional=%.1f ms",
             cmp.mirrored_candidates, cmp.conventional_candidates, cmp.mirrored_ms,
             cmp.conventional_ms));
}

// --- Criterion 9: multi-peak ambiguity resolution --------------------------

void criterion9() {
  ScenarioConfig cfg;
  std::vector<PathParams> paths;
  paths.push_back(make_path(cfg, cd(1.0, 0.0), 0.02e-6, 0.0, 1.2, true));
  const double amp = std::pow(10.0, -0.5);
  // Two targets separated by 0.05 ns / 0.1 Hz: far below the delay/Doppler
  // resolution, so their AoA bases are mutually ambiguous.
  paths.push_back(make_path(cfg, std::polar(amp, 0.5), 0.15005e-6, 120.0, 0.7));
  paths.push_back(make_path(cfg, std::polar(0.4 * amp, -0.4), 0.150e-6, 120.1, 2.3));
  paths.push_back(make_path(cfg, std::polar(amp, 1.4), 0.30e-6, -220.0, 1.5));
  const XiGrid xi = decompose_cacc(cfg, paths).xi();

  AoAConfig acfg;
  const int eff_c = acfg.effective_C(3, cfg.num_packets, cfg.num_subcarriers);
  const double step =
      2.0 * kPi / (acfg.grid_multiplier * eff_c * (cfg.num_antennas - 1));

  // Estimation-grade delay/Doppler inputs: the residual error of a refined
  // grid search keeps any basis from nulling exactly.
  EstimateSet est;
  for (std::size_t l = 1; l < paths.size(); ++l) {
    TargetEstimate t;
    t.delay_rel_s = paths[l].delay_s - paths[0].delay_s + 2e-10;
    t.doppler_hz = paths[l].doppler_hz + 0.3;
    est.targets.push_back(t);
  }

  auto covered = [&](const Algorithm2Result& r, double tol) {
    // Distinct estimates covering distinct truths within tol.
    std::vector<bool> used(r.aoas_rad.size(), false);
    int hits = 0;
    for (std::size_t l = 1; l < paths.size(); ++l) {
      int best = -1;
      double bd = tol;
      for (std::size_t e = 0; e < r.aoas_rad.size(); ++e) {
        if (used[e] || !r.resolved[e]) continue;
        const double d = std::abs(r.aoas_rad[e] - paths[l].spatial_freq_rad);
        if (d < bd) {
          bd = d;
          best = int(e);
        }
      }
      if (best >= 0) {
        used[std::size_t(best)] = true;
        ++hits;
      }
    }
    return hits;
  };

  const auto multi = algorithm2(xi, est, acfg, paths[0].delay_s, cfg);
  acfg.multi_peak = false;
  const auto single = algorithm2(xi, est, acfg, paths[0].delay_s, cfg);

  const int multi_hits = covered(multi, step);
  const int single_hits = covered(single, step);
  const bool pass = multi_hits == 3 && single_hits <= 2;
  report(9, "multi-peak AoA ambiguity resolution", pass,
         fmt("multi-peak covers %d/3 truths within one refined step (%.1e rad); "
             "single-peak covers %d/3 (must drop >= 1)",
             multi_hits, step, single_hits));
}

} // namespace

int main() {
  criterion1();
  criterion2();
  criterion3();
  criterion4();
  criterion5();
  criterion6();
  criterion7();
  criterion8();
  criterion9();
  std::printf("%d/9 criteria passed\n", 9 - g_failures);
  return g_failures == 0 ? 0 : 1;
}
