#include "upsense/aoa.hpp"

#include <cmath>

namespace upsense {

int AoAConfig::effective_C(int num_targets, int m_count, int g_count) const {
  const int fit = std::min(m_count, g_count) - C1 - 1;
  const int rank_bound = std::min(g_count - 4 * num_targets, m_count - 4 * num_targets) - 1;
  return std::min(C, std::min(fit, rank_bound));
}

void AoAConfig::validate(int num_targets, int m_count, int g_count, int n_count) const {
  if (C1 < 0) throw SpecError("C1 must be nonnegative");
  if (2 * (C1 + 1) < 4 * num_targets)
    throw SpecError("C1 too small: need 2(C1+1) >= 4L columns for a rank-4L stack");
  const int c_eff = effective_C(num_targets, m_count, g_count);
  if (!(4.0 * num_targets / (n_count - 1) < c_eff))
    throw SpecError("C must satisfy 4L/(N-1) < C within min(G-4L, M-4L) and C+C1 < min(M, G)");
}

Vector steering(double omega, int n_count) {
  Vector v(n_count - 1);
  for (int n = 1; n < n_count; ++n) v(n - 1) = std::polar(1.0, n * omega);
  return v;
}

Vector spatial_vector_c(const XiGrid& xi, int m, int g) {
  if (m < 0 || m >= xi.packets() || g < 0 || g >= xi.subcarriers())
    throw SpecError("spatial_vector_c: index out of range");
  Vector v(xi.num_slices());
  for (int k = 0; k < xi.num_slices(); ++k)
    v(k) = xi.slices[static_cast<std::size_t>(k)](m, g);
  return v;
}

Matrix build_Cprime(const XiGrid& xi, int m, int g, int C) {
  const int na = xi.num_slices();
  if (m + C - 1 >= xi.packets() || g + C - 1 >= xi.subcarriers())
    throw SpecError("build_Cprime: window overflows the grid");
  Matrix out(C * na, 2);
  for (int i = 0; i < C; ++i) {
    out.block(i * na, 0, na, 1) = spatial_vector_c(xi, m, g + i);
    out.block(i * na, 1, na, 1) = spatial_vector_c(xi, m + i, g);
  }
  return out;
}

Matrix assemble_Cmatrix(const XiGrid& xi, const AoAConfig& cfg) {
  const int na = xi.num_slices();
  Matrix out(cfg.C * na, 2 * (cfg.C1 + 1));
  for (int i = 0; i <= cfg.C1; ++i)
    out.middleCols(2 * i, 2) = build_Cprime(xi, i, i, cfg.C);
  return out;
}

EnlargedBasisPair basis_pair(double omega, double taubar, double fbar, int C, int n_count) {
  const Vector a = steering(omega, n_count);
  const int na = n_count - 1;
  EnlargedBasisPair pair;
  pair.c1.resize(C * na);
  pair.c2.resize(C * na);
  for (int i = 0; i < C; ++i) {
    pair.c1.segment(i * na, na) = a * std::polar(1.0, -i * taubar);
    pair.c2.segment(i * na, na) = a * std::polar(1.0, -i * fbar);
  }
  return pair;
}

void actual_component_steps(const TargetEstimate& t, double tau0_s, double packet_interval_s,
                            double symbol_period_s, double& taubar, double& fbar) {
  (void)tau0_s;
  taubar = 2.0 * kPi * t.delay_rel_s / symbol_period_s;
  fbar = -2.0 * kPi * packet_interval_s * t.doppler_hz;
}

namespace {

struct AoAPeak {
  double omega;
  double value;
};

double objective(const SubspaceDecomposition& dec, double omega, double taubar, double fbar,
                 int C, int n_count) {
  const EnlargedBasisPair b = basis_pair(omega, taubar, fbar, C, n_count);
  const double denom = dec.null_power(b.c1) + dec.null_power(b.c2);
  return denom > 1.0 / kPseudoSpectrumCap ? 1.0 / denom : kPseudoSpectrumCap;
}

} // namespace

Algorithm2Result algorithm2(const XiGrid& xi, const EstimateSet& estimates,
                            const AoAConfig& cfg, double tau0_s,
                            const ScenarioConfig& scenario) {
  const int num_targets = static_cast<int>(estimates.targets.size());
  const int n_count = xi.num_slices() + 1;
  Algorithm2Result result;
  if (num_targets == 0) return result;
  cfg.validate(num_targets, xi.packets(), xi.subcarriers(), n_count);
  AoAConfig eff = cfg;
  eff.C = cfg.effective_C(num_targets, xi.packets(), xi.subcarriers());

  const auto dec = svd_left(assemble_Cmatrix(xi, eff), 4 * num_targets);
  const int grid_size = eff.grid_multiplier * eff.C * (n_count - 1);
  const double step = 2.0 * kPi / grid_size;
  const double min_sep = eff.min_separation_rad(n_count);
  const double t_a = scenario.packet_interval_s;
  const double t_sym = scenario.symbol_period_s();

  // Peak lists per target, refined, sorted by objective value.
  std::vector<std::vector<AoAPeak>> peak_lists(static_cast<std::size_t>(num_targets));
  for (int l = 0; l < num_targets; ++l) {
    double taubar, fbar;
    actual_component_steps(estimates.targets[static_cast<std::size_t>(l)], tau0_s, t_a,
                           t_sym, taubar, fbar);
    std::vector<double> values(static_cast<std::size_t>(grid_size));
    for (int k = 0; k < grid_size; ++k) {
      const double omega = -kPi + (k + 0.5) * step;
      values[static_cast<std::size_t>(k)] =
          objective(dec, omega, taubar, fbar, eff.C, n_count);
    }
    result.candidates_evaluated += grid_size;

    const double global_max = *std::max_element(values.begin(), values.end());
    if (!(global_max > 0.0) || !std::isfinite(global_max)) continue;
    const double threshold = cfg.peak_threshold_ratio * global_max;

    auto& peaks = peak_lists[static_cast<std::size_t>(l)];
    for (int k = 0; k < grid_size; ++k) {
      const double v = values[static_cast<std::size_t>(k)];
      // Circular local maximum above the multi-peak threshold.
      const double prev = values[static_cast<std::size_t>((k + grid_size - 1) % grid_size)];
      const double next = values[static_cast<std::size_t>((k + 1) % grid_size)];
      if (v < threshold || v < prev || v <= next) continue;
      double omega = -kPi + (k + 0.5) * step;
      if (cfg.refine) {
        omega = golden_section_max(
            [&](double w) { return objective(dec, w, taubar, fbar, eff.C, n_count); },
            omega - step, omega + step);
      }
      peaks.push_back({omega, v});
    }
    std::sort(peaks.begin(), peaks.end(),
              [](const AoAPeak& a, const AoAPeak& b) { return a.value > b.value; });
    if (!cfg.multi_peak && peaks.size() > 1) peaks.resize(1);
  }

  result.aoas_rad.assign(static_cast<std::size_t>(num_targets),
                         std::numeric_limits<double>::quiet_NaN());
  result.resolved.assign(static_cast<std::size_t>(num_targets), false);

  std::vector<double> settled;
  auto collides = [&](double omega) {
    for (double s : settled)
      if (std::abs(omega - s) < min_sep) return true;
    return false;
  };
  auto settle = [&](int l, double omega) {
    result.aoas_rad[static_cast<std::size_t>(l)] = omega;
    result.resolved[static_cast<std::size_t>(l)] = true;
    settled.push_back(omega);
  };

  // Single-peak targets settle first, then ambiguous targets choose the
  // highest peak that does not collide with an already-settled AoA.
  for (int l = 0; l < num_targets; ++l) {
    const auto& peaks = peak_lists[static_cast<std::size_t>(l)];
    if (peaks.size() == 1) settle(l, peaks[0].omega);
  }
  for (int l = 0; l < num_targets; ++l) {
    const auto& peaks = peak_lists[static_cast<std::size_t>(l)];
    if (peaks.size() <= 1) continue;
    const AoAPeak* choice = nullptr;
    for (const auto& p : peaks)
      if (!collides(p.omega)) {
        choice = &p;
        break;
      }
    if (!choice) choice = &peaks[0];
    settle(l, choice->omega);
  }
  return result;
}

} // namespace upsense
