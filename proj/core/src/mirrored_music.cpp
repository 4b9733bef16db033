#include "upsense/mirrored_music.hpp"

#include <cmath>

namespace upsense {

void MirrorConfig::validate(int num_targets, int m_count, int g_count, int n_count) const {
  if (!(num_targets <= P && P < m_count - num_targets))
    throw SpecError("P must satisfy L <= P < M - L");
  if (!(num_targets <= Q && Q < g_count - num_targets))
    throw SpecError("Q must satisfy L <= Q < G - L");
  if (n0 < 1 || n0 > n_count - 1) throw SpecError("n0 out of antenna range");
  if (m0 < 0 || m0 >= m_count || g0 < 0 || g0 >= g_count)
    throw SpecError("m0/g0 out of range");
}

Vector mirrored_vector_p(const XiGrid& xi, int n0, int m, int g0, int P) {
  if (n0 < 1 || n0 > xi.num_slices()) throw SpecError("n0 out of range");
  if (m < 0 || m + P >= xi.packets() || g0 < 0 || g0 >= xi.subcarriers())
    throw SpecError("mirrored_vector_p: index overflow");
  const Matrix& slice = xi.slices[static_cast<std::size_t>(n0 - 1)];
  Vector v(P + 1);
  for (int i = 0; i <= P; ++i) v(i) = slice(m + i, g0) + slice(m + P - i, g0);
  return v;
}

Vector mirrored_vector_q(const XiGrid& xi, int n0, int m0, int g, int Q) {
  if (n0 < 1 || n0 > xi.num_slices()) throw SpecError("n0 out of range");
  if (g < 0 || g + Q >= xi.subcarriers() || m0 < 0 || m0 >= xi.packets())
    throw SpecError("mirrored_vector_q: index overflow");
  const Matrix& slice = xi.slices[static_cast<std::size_t>(n0 - 1)];
  Vector v(Q + 1);
  for (int i = 0; i <= Q; ++i) v(i) = slice(m0, g + i) + slice(m0, g + Q - i);
  return v;
}

Vector basis_p(double omega, int P, int m) {
  Vector v(P + 1);
  for (int i = 0; i <= P; ++i)
    v(i) = std::polar(1.0, (m + i) * omega) + std::polar(1.0, (m + P - i) * omega);
  return v;
}

Vector basis_q(double omega, int Q, int g) {
  Vector v(Q + 1);
  for (int i = 0; i <= Q; ++i)
    v(i) = std::polar(1.0, -(g + i) * omega) + std::polar(1.0, -(g + Q - i) * omega);
  return v;
}

Vector doppler_basis(double f_hz, double packet_interval_s, int P) {
  return basis_p(2.0 * kPi * packet_interval_s * f_hz, P);
}

Vector delay_basis(double tau_s, double symbol_period_s, int Q) {
  return basis_q(2.0 * kPi * tau_s / symbol_period_s, Q);
}

Matrix assemble_P(const XiGrid& xi, const MirrorConfig& mc) {
  const int m_count = xi.packets();
  Matrix out(mc.P + 1, m_count - mc.P);
  for (int m = 0; m < m_count - mc.P; ++m)
    out.col(m) = mirrored_vector_p(xi, mc.n0, m, mc.g0, mc.P);
  return out;
}

Matrix assemble_Q(const XiGrid& xi, const MirrorConfig& mc) {
  const int g_count = xi.subcarriers();
  Matrix out(mc.Q + 1, g_count - mc.Q);
  for (int g = 0; g < g_count - mc.Q; ++g)
    out.col(g) = mirrored_vector_q(xi, mc.n0, mc.m0, g, mc.Q);
  return out;
}

void choose_m0_g0(const XiGrid& xi, MirrorConfig& mc) {
  double best = -1.0;
  for (int m = 0; m < xi.packets(); ++m)
    for (int g = 0; g < xi.subcarriers(); ++g) {
      double power = 0.0;
      for (const auto& slice : xi.slices) power += std::norm(slice(m, g));
      if (power > best) {
        best = power;
        mc.m0 = m;
        mc.g0 = g;
      }
    }
}

namespace {

/// Shared scan: candidates k*step_omega, k = 1..K inside (0, pi), then
/// optional local refinement of the chosen peaks on the continuous objective.
AxisEstimates scan_mirrored(const SubspaceDecomposition& dec, int num_targets,
                            double step_omega, const BasisFn& basis,
                            const SearchOptions& opt) {
  const int max_k = static_cast<int>(std::ceil(kPi / step_omega)) - 1;
  if (max_k < 1) throw SpecError("degenerate candidate grid");
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(max_k));
  for (int k = 1; k <= max_k; ++k) grid.push_back(k * step_omega);

  const PseudoSpectrum ps = pseudo_spectrum(dec, basis, grid);
  const RefinedPeaks peaks =
      select_refined_peaks(dec, basis, grid, ps.values, num_targets, step_omega, opt.refine,
                           step_omega * 1e-3, kPi - step_omega * 1e-3);

  AxisEstimates out;
  out.complete = peaks.complete;
  out.candidates_evaluated = static_cast<long>(grid.size());
  out.values = peaks.omegas;
  std::sort(out.values.begin(), out.values.end());
  return out;
}

} // namespace

AxisEstimates estimate_dopplers_abs(const SubspaceDecomposition& pdec, int num_targets,
                                    double packet_interval_s, int P,
                                    const SearchOptions& opt) {
  const double step_omega = 2.0 * kPi / (P + 1); // Doppler step 1/(T_A(P+1))
  auto basis = [P](double w) { return basis_p(w, P); };
  AxisEstimates est = scan_mirrored(pdec, num_targets, step_omega, basis, opt);
  for (auto& v : est.values) v = v / (2.0 * kPi * packet_interval_s);
  return est;
}

AxisEstimates estimate_delays_rel(const SubspaceDecomposition& qdec, int num_targets,
                                  double symbol_period_s, int Q,
                                  const SearchOptions& opt) {
  const double step_omega = 2.0 * kPi / (Q + 1); // delay step T/(Q+1)
  auto basis = [Q](double w) { return basis_q(w, Q); };
  AxisEstimates est = scan_mirrored(qdec, num_targets, step_omega, basis, opt);
  for (auto& v : est.values) v = v * symbol_period_s / (2.0 * kPi);
  return est;
}

cd combine_gain_Pxi(const XiGrid& xi, double f_hz, double tau_abs_s, double omega0,
                    double tau0_s, double packet_interval_s, double symbol_period_s) {
  const int m_count = xi.packets();
  const int g_count = xi.subcarriers();
  Vector wm(m_count), wg(g_count);
  for (int m = 0; m < m_count; ++m)
    wm(m) = std::polar(1.0, m * 2.0 * kPi * packet_interval_s * f_hz);
  for (int g = 0; g < g_count; ++g)
    wg(g) = std::polar(1.0, -g * 2.0 * kPi * (tau_abs_s - tau0_s) / symbol_period_s);

  cd total(0.0);
  for (int k = 0; k < xi.num_slices(); ++k) {
    const int n = k + 1;
    const cd ant = std::polar(1.0, -n * omega0);
    total += ant * (wm.transpose() * xi.slices[static_cast<std::size_t>(k)] * wg)(0, 0);
  }
  return total;
}

EstimateSet pair_and_sign(const std::vector<double>& dopplers_abs,
                          const std::vector<double>& delays_rel, const XiGrid& xi,
                          double omega0, double tau0_s, double packet_interval_s,
                          double symbol_period_s) {
  const int count = static_cast<int>(std::min(dopplers_abs.size(), delays_rel.size()));
  EstimateSet set;
  set.complete = dopplers_abs.size() == delays_rel.size();
  if (count == 0) return set;

  struct Candidate {
    int fi, ti;
    int sign;
    double score;
  };
  std::vector<Candidate> cands;
  for (int fi = 0; fi < count; ++fi)
    for (int ti = 0; ti < count; ++ti)
      for (int sign : {+1, -1}) {
        const double f = sign * dopplers_abs[static_cast<std::size_t>(fi)];
        const double tau = tau0_s + delays_rel[static_cast<std::size_t>(ti)];
        const double score = std::abs(combine_gain_Pxi(xi, f, tau, omega0, tau0_s,
                                                       packet_interval_s, symbol_period_s));
        cands.push_back({fi, ti, sign, score});
      }

  std::vector<bool> f_used(static_cast<std::size_t>(count), false);
  std::vector<bool> t_used(static_cast<std::size_t>(count), false);
  for (int round = 0; round < count; ++round) {
    const Candidate* best = nullptr;
    for (const auto& c : cands) {
      if (f_used[static_cast<std::size_t>(c.fi)] || t_used[static_cast<std::size_t>(c.ti)])
        continue;
      if (!best || c.score > best->score) best = &c;
    }
    if (!best) break;
    f_used[static_cast<std::size_t>(best->fi)] = true;
    t_used[static_cast<std::size_t>(best->ti)] = true;

    TargetEstimate t;
    t.doppler_hz = best->sign * dopplers_abs[static_cast<std::size_t>(best->fi)];
    t.delay_rel_s = delays_rel[static_cast<std::size_t>(best->ti)];
    t.delay_abs_s = tau0_s + t.delay_rel_s;
    t.pair_score = best->score;
    set.targets.push_back(t);
  }
  return set;
}

Algorithm1Result algorithm1(const XiGrid& xi, double omega0, double tau0_s,
                            const ScenarioConfig& cfg, MirrorConfig mc, int num_targets,
                            const SearchOptions& opt) {
  Algorithm1Result result;
  if (num_targets < 1) {
    result.estimates.complete = false;
    return result;
  }
  mc.validate(num_targets, xi.packets(), xi.subcarriers(), xi.num_slices() + 1);

  const auto pdec = svd_left(assemble_P(xi, mc), num_targets);
  const auto qdec = svd_left(assemble_Q(xi, mc), num_targets);
  const auto dopplers =
      estimate_dopplers_abs(pdec, num_targets, cfg.packet_interval_s, mc.P, opt);
  const auto delays = estimate_delays_rel(qdec, num_targets, cfg.symbol_period_s(), mc.Q, opt);
  result.candidates_evaluated = dopplers.candidates_evaluated + delays.candidates_evaluated;

  result.estimates = pair_and_sign(dopplers.values, delays.values, xi, omega0, tau0_s,
                                   cfg.packet_interval_s, cfg.symbol_period_s());
  result.estimates.complete &= dopplers.complete && delays.complete;
  return result;
}

} // namespace upsense
