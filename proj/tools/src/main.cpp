#include "upsense/harness.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

using namespace upsense;

struct CommonOpts {
  std::string config;
  std::string method = "mirrored";
  std::string out;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 1;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config, "key = value configuration file");
  cmd->add_option("--seed", opts.seed, "master RNG seed")
      ->each([&opts](const std::string&) { opts.seed_set = true; });
  cmd->add_option("--method", opts.method, "estimator: mirrored|conventional|ams")
      ->check(CLI::IsMember({"mirrored", "conventional", "ams"}));
  cmd->add_option("--out", opts.out, "output path (default: stdout)");
  cmd->add_option("--threads", opts.threads, "worker threads")->check(CLI::PositiveNumber);
}

ExperimentSpec load_spec(const CommonOpts& opts) {
  ExperimentSpec spec;
  if (!opts.config.empty()) apply_config_file(spec, opts.config);
  if (opts.seed_set) spec.master_seed = opts.seed;
  spec.scenario.rng_seed = spec.master_seed;
  return spec;
}

std::ostream& open_out(const CommonOpts& opts, std::ofstream& file) {
  if (opts.out.empty()) return std::cout;
  file.open(opts.out);
  if (!file) throw SpecError("cannot open output file '" + opts.out + "'");
  return file;
}

/// Shared front half of `estimate`/`spectrum`: CACC plus the configured
/// high-pass on a loaded received grid.
XiGrid filtered_xi(const ExperimentSpec& spec, const RxGrid& rx) {
  const CaccGrid rho = cacc(rx, 0);
  switch (spec.filter) {
    case FilterKind::Butterworth: return highpass_butterworth(rho, HighpassConfig{});
    case FilterKind::MeanSubtraction:
      return highpass_mean_subtraction(rho, spec.mean_sub_window);
    case FilterKind::None: break;
  }
  return rho;
}

int cmd_simulate(const CommonOpts& opts) {
  ExperimentSpec spec = load_spec(opts);
  ScenarioConfig cfg = spec.scenario;
  Rng rng(spec.master_seed);
  const auto paths = make_random_paths(cfg, spec.scene, rng);
  if (!spec.snr_db.empty() && cfg.noise_variance == 0.0)
    cfg.noise_variance = noise_variance_for_snr_db(paths, spec.snr_db.front());
  const OffsetTrace offsets = generate_offsets(cfg, spec.offsets, rng);
  const SymbolGrid symbols = generate_symbols(cfg, rng);
  const RxGrid rx = synthesize_rx(cfg, paths, offsets, symbols, rng);
  if (opts.out.empty()) throw SpecError("simulate requires --out (binary grid dump)");
  dump_rxgrid_file(rx, opts.out);
  std::cerr << "wrote " << rx.num_slices() << "x" << rx.packets() << "x" << rx.subcarriers()
            << " grid to " << opts.out << "\n";
  return 0;
}

int cmd_estimate(const CommonOpts& opts, const std::string& in_path) {
  ExperimentSpec spec = load_spec(opts);
  const RxGrid rx = load_rxgrid_file(in_path);
  const ScenarioConfig& cfg = spec.scenario;
  const int num_targets = spec.scene.num_targets;
  const double tau0 = spec.scene.los_delay_s;
  const double omega0 = spatial_freq_from_aoa(spec.los_aoa_rad, cfg.antenna_spacing_ratio);

  EstimateSet est;
  const Method method = method_from_string(opts.method);
  MirrorConfig mc = spec.mirror;
  if (method == Method::Ams) {
    const AmsGrids ams = ams_transform(rx);
    choose_m0_g0(ams.xi_ams, mc);
    est = ams_estimate(ams, tau0, cfg, mc, num_targets).estimates;
  } else {
    const XiGrid xi = filtered_xi(spec, rx);
    if (spec.auto_reference) mc.n0 = select_reference_index_n0(xi);
    choose_m0_g0(xi, mc);
    est = method == Method::Mirrored
              ? algorithm1(xi, omega0, tau0, cfg, mc, num_targets).estimates
              : conventional_estimate(xi, omega0, tau0, cfg, mc, num_targets).estimates;
    if (spec.include_aoa && !est.targets.empty()) {
      const auto aoa = algorithm2(xi, est, spec.aoa, tau0, cfg);
      for (std::size_t l = 0; l < est.targets.size(); ++l) {
        est.targets[l].aoa_rad = aoa.aoas_rad[l];
        est.targets[l].aoa_resolved = aoa.resolved[l];
      }
    }
  }
  std::ofstream file;
  write_estimates_csv(est, open_out(opts, file));
  return est.complete ? 0 : 2;
}

int cmd_spectrum(const CommonOpts& opts, const std::string& in_path, int slice) {
  ExperimentSpec spec = load_spec(opts);
  const RxGrid rx = load_rxgrid_file(in_path);
  const XiGrid xi = filtered_xi(spec, rx);
  // Rows = delay bins, columns = Doppler bins.
  const Eigen::MatrixXd map = spectrum_2d(xi, slice).transpose();
  std::ofstream file;
  write_spectrum_csv(map, open_out(opts, file));
  return 0;
}

int cmd_experiment(const CommonOpts& opts) {
  ExperimentSpec spec = load_spec(opts);
  if (!opts.method.empty()) spec.methods = {method_from_string(opts.method)};
  const ExperimentResult result = run_experiment(spec, opts.threads);
  std::ofstream file;
  write_experiment_csv(result, open_out(opts, file), spec.predict);
  return 0;
}

int cmd_bench(const CommonOpts& opts, int repeats) {
  ExperimentSpec spec = load_spec(opts);
  const BenchComparison cmp = bench_candidate_counts(spec, repeats);
  std::ofstream file;
  std::ostream& os = open_out(opts, file);
  os << "method,candidates,wall_ms\n";
  os << "mirrored," << cmp.mirrored_candidates << ',' << cmp.mirrored_ms << "\n";
  os << "conventional," << cmp.conventional_candidates << ',' << cmp.conventional_ms << "\n";
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Uplink bistatic sensing: simulation, estimation, experiments"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::string in_path;
  int slice = 0;
  int repeats = 3;

  auto* simulate = app.add_subcommand("simulate", "synthesize a received grid dump");
  add_common(simulate, opts);

  auto* estimate = app.add_subcommand("estimate", "run an estimator on a grid dump");
  add_common(estimate, opts);
  estimate->add_option("--in", in_path, "binary grid dump")->required();

  auto* spectrum = app.add_subcommand("spectrum", "2D delay/Doppler magnitude map");
  add_common(spectrum, opts);
  spectrum->add_option("--in", in_path, "binary grid dump")->required();
  spectrum->add_option("--slice", slice, "antenna slice index");

  auto* experiment = app.add_subcommand("experiment", "Monte-Carlo sweep to CSV");
  add_common(experiment, opts);

  auto* bench = app.add_subcommand("bench", "candidate-count / wall-time counters");
  add_common(bench, opts);
  bench->add_option("--repeats", repeats, "averaging repeats")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) return cmd_simulate(opts);
    if (estimate->parsed()) return cmd_estimate(opts, in_path);
    if (spectrum->parsed()) return cmd_spectrum(opts, in_path, slice);
    if (experiment->parsed()) return cmd_experiment(opts);
    if (bench->parsed()) return cmd_bench(opts, repeats);
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
  return 1;
}
