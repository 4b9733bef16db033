#include "helpers.hpp"
#include "upsense/cacc.hpp"

#include <doctest.h>

using namespace upsense;

namespace {

RxGrid noiseless_rx(const ScenarioConfig& cfg, const std::vector<PathParams>& paths,
                    const OffsetTrace& off, Rng& rng) {
  const SymbolGrid sym = generate_symbols(cfg, rng);
  Rng noise_rng(0);
  return synthesize_rx(cfg, paths, off, sym, noise_rng);
}

} // namespace

TEST_CASE("CACC of a noiseless scene equals the analytic four-term decomposition") {
  ScenarioConfig cfg = testing::tiny_config();
  auto paths = testing::fixed_scene(cfg);
  Rng rng(21);
  OffsetModel om;
  om.cfo_hz = 500.0;
  const OffsetTrace off = generate_offsets(cfg, om, rng);
  const RxGrid rx = noiseless_rx(cfg, paths, off, rng);

  const CaccGrid rho = cacc(rx, 0);
  const ComplexGrid oracle = decompose_cacc(cfg, paths).total();
  REQUIRE(rho.num_slices() == cfg.num_antennas - 1);
  for (int k = 0; k < rho.num_slices(); ++k)
    CHECK((rho.slices[k] - oracle.slices[k]).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("TO/CFO cancel exactly in the cross-correlation") {
  ScenarioConfig cfg = testing::tiny_config();
  auto paths = testing::fixed_scene(cfg);
  Rng rng(22);
  const SymbolGrid sym = generate_symbols(cfg, rng);
  OffsetModel om;
  om.cfo = CfoModel::RandomWalk;
  om.walk_step_hz = 50.0;
  const OffsetTrace off = generate_offsets(cfg, om, rng);
  Rng nr(0);
  const RxGrid with_off = synthesize_rx(cfg, paths, off, sym, nr);
  const RxGrid without = synthesize_rx(cfg, paths, OffsetTrace::zeros(cfg.num_packets), sym, nr);

  const CaccGrid a = cacc(with_off, 0);
  const CaccGrid b = cacc(without, 0);
  for (int k = 0; k < a.num_slices(); ++k)
    CHECK((a.slices[k] - b.slices[k]).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("unit-modulus symbols cancel in the cross-correlation") {
  ScenarioConfig cfg = testing::tiny_config();
  auto paths = testing::fixed_scene(cfg);
  Rng rng(23);
  const SymbolGrid sym_a = generate_symbols(cfg, rng);
  SymbolGrid sym_b;
  sym_b.x = Matrix::Ones(cfg.num_packets, cfg.num_subcarriers);
  Rng nr(0);
  const OffsetTrace off = OffsetTrace::zeros(cfg.num_packets);
  const CaccGrid a = cacc(synthesize_rx(cfg, paths, off, sym_a, nr), 0);
  const CaccGrid b = cacc(synthesize_rx(cfg, paths, off, sym_b, nr), 0);
  for (int k = 0; k < a.num_slices(); ++k)
    CHECK((a.slices[k] - b.slices[k]).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("decomposition structure per path count") {
  ScenarioConfig cfg = testing::tiny_config();

  SUBCASE("LOS only: no NLOS terms") {
    std::vector<PathParams> paths{make_path(cfg, cd(1.0, 0.0), 0.02e-6, 0.0, 0.9, true)};
    const auto d = decompose_cacc(cfg, paths);
    CHECK(mean_power(d.rho2_tilde) == 0.0);
    CHECK(mean_power(d.rho3) == 0.0);
    CHECK(mean_power(d.rho4) == 0.0);
    CHECK(std::abs(d.rho1[0]) == doctest::Approx(1.0));
  }
  SUBCASE("L=1: the cross-term sum is empty") {
    std::vector<PathParams> paths{make_path(cfg, cd(1.0, 0.0), 0.02e-6, 0.0, 0.9, true),
                                  make_path(cfg, cd(0.3, 0.1), 0.2e-6, 100.0, 1.4)};
    const auto d = decompose_cacc(cfg, paths);
    CHECK(d.rho2_tilde_mean_power() == 0.0);
    CHECK(mean_power(d.rho4) > 0.0);
  }
  SUBCASE("L=3 with 10 dB gap: cross terms sit below the side/actual products") {
    auto paths = testing::fixed_scene(cfg);
    const auto d = decompose_cacc(cfg, paths);
    const double xi_power = mean_power(d.xi());
    const double cross_power = d.rho2_tilde_mean_power();
    CHECK(10.0 * std::log10(xi_power / cross_power) >= cfg.los_nlos_gap_db);
  }
  SUBCASE("rho1 is constant per antenna and matches |alpha_0|^2 e^{jn Omega_0}") {
    auto paths = testing::fixed_scene(cfg);
    const auto d = decompose_cacc(cfg, paths);
    for (int k = 0; k < cfg.num_antennas - 1; ++k) {
      const cd expect =
          std::norm(paths[0].gain) * std::polar(1.0, (k + 1) * paths[0].spatial_freq_rad);
      CHECK(std::abs(d.rho1[static_cast<std::size_t>(k)] - expect) < 1e-12);
    }
  }
}

TEST_CASE("delta_xi closed form equals the mean power of the cross terms") {
  ScenarioConfig cfg = testing::small_config();
  auto paths = testing::fixed_scene(cfg);
  const auto d = decompose_cacc(cfg, paths);
  double closed = 0.0;
  for (std::size_t l = 1; l < paths.size(); ++l)
    for (std::size_t x = 1; x < paths.size(); ++x)
      if (x != l) closed += std::norm(paths[l].gain) * std::norm(paths[x].gain);
  // Tones at distinct difference frequencies: mean power ~ sum of tone powers.
  CHECK(d.rho2_tilde_mean_power() == doctest::Approx(closed).epsilon(0.05));
}

TEST_CASE("Butterworth high-pass recovers xi from the full correlation") {
  ScenarioConfig cfg = testing::small_config();
  auto paths = testing::fixed_scene(cfg);
  Rng rng(31);
  const RxGrid rx = noiseless_rx(cfg, paths, OffsetTrace::zeros(cfg.num_packets), rng);
  const CaccGrid rho = cacc(rx, 0);
  const XiGrid xi = testing::analytic_xi(cfg, paths);

  const XiGrid hat = highpass_butterworth(rho, HighpassConfig{});
  const double rel = input_error(hat, xi) / mean_power(xi);
  // L=3: dominated by the residual cross terms.
  const double floor = decompose_cacc(cfg, paths).rho2_tilde_mean_power() / mean_power(xi);
  CHECK(rel < 4.0 * floor);

  SUBCASE("L=1 residual below -40 dB of mean |xi|^2") {
    std::vector<PathParams> one{paths[0], paths[1]};
    const RxGrid rx1 = noiseless_rx(cfg, one, OffsetTrace::zeros(cfg.num_packets), rng);
    const XiGrid xi1 = testing::analytic_xi(cfg, one);
    const XiGrid hat1 = highpass_butterworth(cacc(rx1, 0), HighpassConfig{});
    CHECK(input_error(hat1, xi1) / mean_power(xi1) < 1e-4);
  }
}

TEST_CASE("mean-subtraction baseline") {
  ScenarioConfig cfg = testing::small_config();

  SUBCASE("constant grid with full window vanishes") {
    ComplexGrid grid = ComplexGrid::zeros(1, cfg.num_packets, 8);
    grid.slices[0].setConstant(cd(2.0, -1.0));
    const XiGrid out = highpass_mean_subtraction(grid, cfg.num_packets);
    CHECK(mean_power(out) < 1e-24);
  }
  SUBCASE("fast tone passes with the closed-form Dirichlet loss") {
    const int window = 33;
    const double w = 0.6;
    ComplexGrid grid = ComplexGrid::zeros(1, 256, 4);
    for (int m = 0; m < 256; ++m) grid.slices[0].row(m).setConstant(std::polar(1.0, m * w));
    const XiGrid out = highpass_mean_subtraction(grid, window);
    // Interior rows: the leave-one-out mean of a tone over a centred window
    // of W packets is (W*D(w) - 1)/(W - 1) times the tone, with D the
    // Dirichlet kernel.
    const double dirichlet = std::sin(window * w / 2.0) / (window * std::sin(w / 2.0));
    const double gain = 1.0 - (window * dirichlet - 1.0) / (window - 1.0);
    for (int m = 100; m < 150; ++m) {
      const cd expect = gain * grid.slices[0](m, 0);
      CHECK(std::abs(out.slices[0](m, 0) - expect) < 1e-9);
    }
    const double loss_db =
        10.0 * std::log10(mean_power(out) / mean_power(grid));
    CHECK(loss_db > -3.0);
  }
}

TEST_CASE("2D spectrum peak locations") {
  ScenarioConfig cfg = testing::small_config();
  const int m_count = cfg.num_packets, g_count = cfg.num_subcarriers;

  SUBCASE("constant grid concentrates at the DC bin") {
    ComplexGrid grid = ComplexGrid::zeros(1, m_count, g_count);
    grid.slices[0].setOnes();
    const Eigen::MatrixXd spec = spectrum_2d(grid, 0);
    Eigen::Index r, c;
    spec.maxCoeff(&r, &c);
    CHECK(r == m_count / 2);
    CHECK(c == g_count / 2);
  }
  SUBCASE("single on-bin target yields the two mirrored peaks") {
    // Doppler/delay chosen exactly on FFT bins.
    const double f_d = 8.0 / (m_count * cfg.packet_interval_s);
    const double tau_rel = 12.0 * cfg.symbol_period_s() / g_count;
    std::vector<PathParams> paths{
        make_path(cfg, cd(1.0, 0.0), 0.02e-6, 0.0, 1.0, true),
        make_path(cfg, cd(0.3, 0.0), 0.02e-6 + tau_rel, f_d, 1.5)};
    const XiGrid xi = testing::analytic_xi(cfg, paths);
    const Eigen::MatrixXd spec = spectrum_2d(xi, 0);
    Eigen::Index r, c;
    spec.maxCoeff(&r, &c);
    const int dr = static_cast<int>(r) - m_count / 2;
    const int dc = static_cast<int>(c) - g_count / 2;
    CHECK(std::abs(dr) == 8);
    CHECK(std::abs(dc) == 12);
    // The mirrored bin carries (nearly) equal energy.
    CHECK(spec(m_count / 2 - dr, g_count / 2 - dc) ==
          doctest::Approx(spec(r, c)).epsilon(0.15));
  }
}

TEST_CASE("reference-slice selection tracks the analytic objective") {
  ScenarioConfig cfg = testing::small_config();
  Rng rng(41);
  SceneConstraints sc;
  int agree = 0;
  const int trials = 20;
  for (int t = 0; t < trials; ++t) {
    const auto paths = make_random_paths(cfg, sc, rng);
    const XiGrid xi = testing::analytic_xi(cfg, paths);
    // The analytic objective |sum_l |alpha_l|^2 e^{jn Omega_l}|^2 over n.
    int best_n = 1;
    double best = std::numeric_limits<double>::infinity();
    for (int n = 1; n < cfg.num_antennas; ++n) {
      cd acc(0.0);
      for (const auto& p : paths)
        acc += std::norm(p.gain) * std::polar(1.0, n * p.spatial_freq_rad);
      if (std::norm(acc) < best) {
        best = std::norm(acc);
        best_n = n;
      }
    }
    // Feed the unfiltered correlation (constants intact) to the selector.
    const CaccDecomposition d = decompose_cacc(cfg, paths);
    if (select_reference_index_n0(d.total()) == best_n) ++agree;
  }
  CHECK(agree >= 19);
}

TEST_CASE("input_error and mean_power basics") {
  ComplexGrid a = ComplexGrid::zeros(2, 4, 4);
  ComplexGrid b = a;
  CHECK(input_error(a, b) == 0.0);
  b.slices[0].setConstant(cd(1.0, 0.0));
  CHECK(input_error(a, b) == doctest::Approx(0.5)); // half the entries off by 1
  CHECK(mean_power(b) == doctest::Approx(0.5));
  ComplexGrid c = ComplexGrid::zeros(1, 4, 4);
  CHECK_THROWS_AS(input_error(a, c), SpecError);
}
