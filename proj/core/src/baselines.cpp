#include "upsense/baselines.hpp"

#include <cmath>

namespace upsense {

namespace {

Matrix hankel_p(const XiGrid& xi, const MirrorConfig& mc) {
  const int m_count = xi.packets();
  const Matrix& slice = xi.slices[static_cast<std::size_t>(mc.n0 - 1)];
  Matrix out(mc.P + 1, m_count - mc.P);
  for (int m = 0; m < m_count - mc.P; ++m)
    for (int i = 0; i <= mc.P; ++i) out(i, m) = slice(m + i, mc.g0);
  return out;
}

Matrix hankel_q(const XiGrid& xi, const MirrorConfig& mc) {
  const int g_count = xi.subcarriers();
  const Matrix& slice = xi.slices[static_cast<std::size_t>(mc.n0 - 1)];
  Matrix out(mc.Q + 1, g_count - mc.Q);
  for (int g = 0; g < g_count - mc.Q; ++g)
    for (int i = 0; i <= mc.Q; ++i) out(i, g) = slice(mc.m0, g + i);
  return out;
}

Vector plain_basis(double omega, int len, double sign) {
  Vector v(len);
  for (int i = 0; i < len; ++i) v(i) = std::polar(1.0, sign * i * omega);
  return v;
}

/// Signed scan at the mirrored grid step: candidates +/- k*step, k = 1..K,
/// where K matches the mirrored half-range count. Values returned in peak
/// magnitude order.
AxisEstimates scan_signed(const SubspaceDecomposition& dec, int num_peaks, double step_omega,
                          const BasisFn& basis, const SearchOptions& opt) {
  const int max_k = static_cast<int>(std::ceil(kPi / step_omega)) - 1;
  std::vector<double> grid;
  grid.reserve(2 * static_cast<std::size_t>(max_k));
  for (int k = -max_k; k <= max_k; ++k)
    if (k != 0) grid.push_back(k * step_omega);

  const PseudoSpectrum ps = pseudo_spectrum(dec, basis, grid);
  const RefinedPeaks peaks =
      select_refined_peaks(dec, basis, grid, ps.values, num_peaks, step_omega, opt.refine,
                           -kPi + step_omega * 1e-3, kPi - step_omega * 1e-3);

  AxisEstimates out;
  out.complete = peaks.complete;
  out.candidates_evaluated = static_cast<long>(grid.size());
  out.values = peaks.omegas;
  return out;
}

AxisEstimates conventional_axis(const XiGrid& xi, SearchAxis axis, int num_peaks,
                                int signal_rank, const ScenarioConfig& cfg,
                                const MirrorConfig& mc, const SearchOptions& opt) {
  if (axis == SearchAxis::Doppler) {
    const auto dec = svd_left(hankel_p(xi, mc), signal_rank);
    const double step = 2.0 * kPi / (mc.P + 1);
    const int len = mc.P + 1;
    auto basis = [len](double w) { return plain_basis(w, len, +1.0); };
    AxisEstimates est = scan_signed(dec, num_peaks, step, basis, opt);
    for (auto& v : est.values) v /= 2.0 * kPi * cfg.packet_interval_s;
    return est;
  }
  const auto dec = svd_left(hankel_q(xi, mc), signal_rank);
  const double step = 2.0 * kPi / (mc.Q + 1);
  const int len = mc.Q + 1;
  auto basis = [len](double w) { return plain_basis(w, len, -1.0); };
  AxisEstimates est = scan_signed(dec, num_peaks, step, basis, opt);
  for (auto& v : est.values) v *= cfg.symbol_period_s() / (2.0 * kPi);
  return est;
}

/// Greedy pairing over signed Doppler candidates and positive relative
/// delays using a caller-supplied score. Mirror-sign duplicates of a matched
/// Doppler are removed together with the matched pair.
EstimateSet pair_signed(const std::vector<double>& dopplers_signed,
                        const std::vector<double>& delays_rel, double tau0_s,
                        double doppler_group_tol_hz, int num_targets,
                        const std::function<double(double, double)>& score_fn) {
  EstimateSet set;
  std::vector<bool> f_used(dopplers_signed.size(), false);
  std::vector<bool> t_used(delays_rel.size(), false);

  struct Cand {
    std::size_t fi, ti;
    double score;
  };
  std::vector<Cand> cands;
  for (std::size_t fi = 0; fi < dopplers_signed.size(); ++fi)
    for (std::size_t ti = 0; ti < delays_rel.size(); ++ti) {
      if (delays_rel[ti] <= 0.0) continue;
      cands.push_back({fi, ti, score_fn(dopplers_signed[fi], tau0_s + delays_rel[ti])});
    }

  for (int round = 0; round < num_targets; ++round) {
    const Cand* best = nullptr;
    for (const auto& c : cands) {
      if (f_used[c.fi] || t_used[c.ti]) continue;
      if (!best || c.score > best->score) best = &c;
    }
    if (!best) break;
    t_used[best->ti] = true;
    // Drop the matched Doppler and its mirror-sign duplicate.
    const double mag = std::abs(dopplers_signed[best->fi]);
    for (std::size_t fi = 0; fi < dopplers_signed.size(); ++fi)
      if (std::abs(std::abs(dopplers_signed[fi]) - mag) < doppler_group_tol_hz)
        f_used[fi] = true;

    TargetEstimate t;
    t.doppler_hz = dopplers_signed[best->fi];
    t.delay_rel_s = delays_rel[best->ti];
    t.delay_abs_s = tau0_s + t.delay_rel_s;
    t.pair_score = best->score;
    set.targets.push_back(t);
  }
  set.complete = static_cast<int>(set.targets.size()) == num_targets;
  return set;
}

/// Combining gain matched to the actual (non-mirrored) component; used for
/// AMS grids, which carry no side product to correlate against.
double combine_gain_actual(const XiGrid& xi, double f_hz, double tau_abs_s, double tau0_s,
                           double packet_interval_s, double symbol_period_s) {
  const int m_count = xi.packets();
  const int g_count = xi.subcarriers();
  Vector wm(m_count), wg(g_count);
  for (int m = 0; m < m_count; ++m)
    wm(m) = std::polar(1.0, -m * 2.0 * kPi * packet_interval_s * f_hz);
  for (int g = 0; g < g_count; ++g)
    wg(g) = std::polar(1.0, g * 2.0 * kPi * (tau_abs_s - tau0_s) / symbol_period_s);
  double total = 0.0;
  // Magnitude per antenna: the unknown target AoA phase must not cancel.
  for (const auto& slice : xi.slices) total += std::abs((wm.transpose() * slice * wg)(0, 0));
  return total;
}

} // namespace

AxisEstimates conventional_music(const XiGrid& xi, SearchAxis axis, int num_targets,
                                 const ScenarioConfig& cfg, const MirrorConfig& mc,
                                 const SearchOptions& opt) {
  mc.validate(num_targets, xi.packets(), xi.subcarriers(), xi.num_slices() + 1);
  return conventional_axis(xi, axis, 2 * num_targets, 2 * num_targets, cfg, mc, opt);
}

Algorithm1Result conventional_estimate(const XiGrid& xi, double omega0, double tau0_s,
                                       const ScenarioConfig& cfg, const MirrorConfig& mc,
                                       int num_targets, const SearchOptions& opt) {
  Algorithm1Result result;
  if (num_targets < 1) {
    result.estimates.complete = false;
    return result;
  }
  const auto dopplers = conventional_music(xi, SearchAxis::Doppler, num_targets, cfg, mc, opt);
  const auto delays = conventional_music(xi, SearchAxis::Delay, num_targets, cfg, mc, opt);
  result.candidates_evaluated = dopplers.candidates_evaluated + delays.candidates_evaluated;

  const double group_tol = 0.5 / (cfg.packet_interval_s * (mc.P + 1));
  auto score = [&](double f, double tau_abs) {
    return std::abs(combine_gain_Pxi(xi, f, tau_abs, omega0, tau0_s, cfg.packet_interval_s,
                                     cfg.symbol_period_s()));
  };
  result.estimates = pair_signed(dopplers.values, delays.values, tau0_s, group_tol,
                                 num_targets, score);
  result.estimates.complete &= dopplers.complete && delays.complete;
  return result;
}

AmsGrids ams_transform(const RxGrid& rx) {
  const int n_count = rx.num_slices();
  if (n_count < 2) throw SpecError("AMS needs at least two antennas");
  AmsGrids out;
  out.a.slices.reserve(static_cast<std::size_t>(n_count));
  out.b.slices.reserve(static_cast<std::size_t>(n_count));
  for (const auto& slice : rx.slices) {
    // LOS-dominance estimate: per-(n,g) mean over the full M packets.
    const Eigen::RowVectorXcd mean = slice.colwise().mean();
    Matrix d_hat = mean.replicate(slice.rows(), 1);
    out.a.slices.push_back(slice - d_hat);
    out.b.slices.push_back(slice + d_hat);
  }
  const Matrix b0_conj = out.b.slices[0].conjugate();
  for (int n = 1; n < n_count; ++n)
    out.xi_ams.slices.push_back(out.a.slices[static_cast<std::size_t>(n)].cwiseProduct(b0_conj));
  return out;
}

Algorithm1Result ams_estimate(const AmsGrids& ams, double tau0_s, const ScenarioConfig& cfg,
                              const MirrorConfig& mc, int num_targets,
                              const SearchOptions& opt) {
  Algorithm1Result result;
  if (num_targets < 1) {
    result.estimates.complete = false;
    return result;
  }
  const XiGrid& xi = ams.xi_ams;
  mc.validate(num_targets, xi.packets(), xi.subcarriers(), xi.num_slices() + 1);

  // The AMS output is approximately 2*rho4: one component per target.
  const auto dopplers =
      conventional_axis(xi, SearchAxis::Doppler, num_targets, num_targets, cfg, mc, opt);
  const auto delays =
      conventional_axis(xi, SearchAxis::Delay, num_targets, num_targets, cfg, mc, opt);
  result.candidates_evaluated = dopplers.candidates_evaluated + delays.candidates_evaluated;

  const double group_tol = 0.5 / (cfg.packet_interval_s * (mc.P + 1));
  auto score = [&](double f, double tau_abs) {
    return combine_gain_actual(xi, f, tau_abs, tau0_s, cfg.packet_interval_s,
                               cfg.symbol_period_s());
  };
  result.estimates = pair_signed(dopplers.values, delays.values, tau0_s, group_tol,
                                 num_targets, score);
  result.estimates.complete &= dopplers.complete && delays.complete;
  return result;
}

} // namespace upsense
