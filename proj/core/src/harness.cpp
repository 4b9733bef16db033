#include "upsense/harness.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

namespace upsense {

Method method_from_string(const std::string& name) {
  if (name == "mirrored") return Method::Mirrored;
  if (name == "conventional") return Method::Conventional;
  if (name == "ams") return Method::Ams;
  throw SpecError("unknown method '" + name + "' (expected mirrored|conventional|ams)");
}

std::string to_string(Method method) {
  switch (method) {
    case Method::Mirrored: return "mirrored";
    case Method::Conventional: return "conventional";
    case Method::Ams: return "ams";
  }
  throw SpecError("bad method enum");
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b) {
  // splitmix64 over a mixed counter; decorrelates neighbouring trials.
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (a * 0x100000001ULL + b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// --- Config files ----------------------------------------------------------

namespace {

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) continue;
    out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

double parse_double(const std::string& value, const std::string& ctx) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw SpecError(ctx + ": expected a number, got '" + value + "'");
  }
}

long parse_int(const std::string& value, const std::string& ctx) {
  try {
    std::size_t pos = 0;
    const long v = std::stol(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw SpecError(ctx + ": expected an integer, got '" + value + "'");
  }
}

bool parse_bool(const std::string& value, const std::string& ctx) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw SpecError(ctx + ": expected a boolean, got '" + value + "'");
}

} // namespace

void apply_key_value(ExperimentSpec& spec, const std::string& key, const std::string& value,
                     const std::string& ctx) {
  auto& sc = spec.scenario;
  if (key == "carrier_freq_hz") sc.carrier_freq_hz = parse_double(value, ctx);
  else if (key == "num_subcarriers") sc.num_subcarriers = static_cast<int>(parse_int(value, ctx));
  else if (key == "bandwidth_hz") sc.bandwidth_hz = parse_double(value, ctx);
  else if (key == "cp_period_s") sc.cp_period_s = parse_double(value, ctx);
  else if (key == "packet_interval_s") sc.packet_interval_s = parse_double(value, ctx);
  else if (key == "num_packets") sc.num_packets = static_cast<int>(parse_int(value, ctx));
  else if (key == "num_antennas") sc.num_antennas = static_cast<int>(parse_int(value, ctx));
  else if (key == "antenna_spacing_ratio") sc.antenna_spacing_ratio = parse_double(value, ctx);
  else if (key == "noise_variance") sc.noise_variance = parse_double(value, ctx);
  else if (key == "los_nlos_gap_db") sc.los_nlos_gap_db = parse_double(value, ctx);
  else if (key == "num_targets") spec.scene.num_targets = static_cast<int>(parse_int(value, ctx));
  else if (key == "delay_max_s") spec.scene.delay_max_s = parse_double(value, ctx);
  else if (key == "los_delay_s") spec.scene.los_delay_s = parse_double(value, ctx);
  else if (key == "los_aoa_rad") spec.los_aoa_rad = parse_double(value, ctx);
  else if (key == "doppler_max_hz") spec.scene.doppler_max_hz = parse_double(value, ctx);
  else if (key == "min_abs_doppler_hz") spec.scene.min_abs_doppler_hz = parse_double(value, ctx);
  else if (key == "min_delay_sep_s") spec.scene.min_delay_sep_s = parse_double(value, ctx);
  else if (key == "min_doppler_sep_hz") spec.scene.min_doppler_sep_hz = parse_double(value, ctx);
  else if (key == "to_model") {
    if (value == "none") spec.offsets.to = ToModel::None;
    else if (value == "per_packet") spec.offsets.to = ToModel::PerPacketUniform;
    else throw SpecError(ctx + ": unknown to_model '" + value + "'");
  } else if (key == "cfo_model") {
    if (value == "none") spec.offsets.cfo = CfoModel::None;
    else if (value == "constant") spec.offsets.cfo = CfoModel::Constant;
    else if (value == "random_walk") spec.offsets.cfo = CfoModel::RandomWalk;
    else throw SpecError(ctx + ": unknown cfo_model '" + value + "'");
  } else if (key == "to_range_s") spec.offsets.to_range_s = parse_double(value, ctx);
  else if (key == "cfo_hz") spec.offsets.cfo_hz = parse_double(value, ctx);
  else if (key == "cfo_walk_step_hz") spec.offsets.walk_step_hz = parse_double(value, ctx);
  else if (key == "mirror_p") spec.mirror.P = static_cast<int>(parse_int(value, ctx));
  else if (key == "mirror_q") spec.mirror.Q = static_cast<int>(parse_int(value, ctx));
  else if (key == "n0") spec.mirror.n0 = static_cast<int>(parse_int(value, ctx));
  else if (key == "aoa_c") spec.aoa.C = static_cast<int>(parse_int(value, ctx));
  else if (key == "aoa_c1") spec.aoa.C1 = static_cast<int>(parse_int(value, ctx));
  else if (key == "aoa_multi_peak") spec.aoa.multi_peak = parse_bool(value, ctx);
  else if (key == "filter") {
    if (value == "butterworth") spec.filter = FilterKind::Butterworth;
    else if (value == "mean_subtraction") spec.filter = FilterKind::MeanSubtraction;
    else if (value == "none") spec.filter = FilterKind::None;
    else throw SpecError(ctx + ": unknown filter '" + value + "'");
  } else if (key == "mean_sub_window") {
    spec.mean_sub_window = static_cast<int>(parse_int(value, ctx));
  } else if (key == "snr_db") {
    spec.snr_db.clear();
    for (const auto& item : split_list(value)) spec.snr_db.push_back(parse_double(item, ctx));
    if (spec.snr_db.empty()) throw SpecError(ctx + ": snr_db list is empty");
  } else if (key == "trials") spec.trials = static_cast<int>(parse_int(value, ctx));
  else if (key == "methods") {
    spec.methods.clear();
    for (const auto& item : split_list(value)) spec.methods.push_back(method_from_string(item));
    if (spec.methods.empty()) throw SpecError(ctx + ": methods list is empty");
  } else if (key == "include_aoa") spec.include_aoa = parse_bool(value, ctx);
  else if (key == "predict") spec.predict = parse_bool(value, ctx);
  else if (key == "auto_reference") spec.auto_reference = parse_bool(value, ctx);
  else if (key == "seed") spec.master_seed = static_cast<std::uint64_t>(parse_int(value, ctx));
  else throw SpecError(ctx + ": unknown key '" + key + "'");
}

void apply_config_file(ExperimentSpec& spec, const std::string& path) {
  std::ifstream is(path);
  if (!is) throw SpecError("cannot open config file '" + path + "'");
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto eq = line.find('=');
    const std::string ctx = path + ":" + std::to_string(lineno);
    if (eq == std::string::npos) throw SpecError(ctx + ": expected 'key = value'");
    auto trim = [](std::string s) {
      const auto x = s.find_first_not_of(" \t\r");
      if (x == std::string::npos) return std::string();
      const auto y = s.find_last_not_of(" \t\r");
      return s.substr(x, y - x + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw SpecError(ctx + ": empty key");
    apply_key_value(spec, key, value, ctx);
  }
}

// --- Truth matching --------------------------------------------------------

MatchStats match_targets(const std::vector<PathParams>& paths, const EstimateSet& est,
                         const ScenarioConfig& cfg, double gate) {
  const double t_a = cfg.packet_interval_s;
  const double t_sym = cfg.symbol_period_s();
  const PathParams& los = los_path(paths);

  std::vector<const PathParams*> truth;
  for (const auto& p : paths)
    if (!p.is_los) truth.push_back(&p);

  MatchStats stats;
  stats.targets = static_cast<int>(truth.size());
  stats.estimates = static_cast<int>(est.targets.size());

  struct Pair {
    std::size_t ti, ei;
    double dist;
  };
  std::vector<Pair> pairs;
  for (std::size_t ti = 0; ti < truth.size(); ++ti)
    for (std::size_t ei = 0; ei < est.targets.size(); ++ei) {
      const auto& e = est.targets[ei];
      const double df = (e.doppler_hz - truth[ti]->doppler_hz) * t_a;
      const double dt = (e.delay_rel_s - (truth[ti]->delay_s - los.delay_s)) / t_sym;
      pairs.push_back({ti, ei, df * df + dt * dt});
    }
  std::sort(pairs.begin(), pairs.end(),
            [](const Pair& a, const Pair& b) { return a.dist < b.dist; });

  std::vector<bool> t_used(truth.size(), false), e_used(est.targets.size(), false);
  for (const auto& p : pairs) {
    if (t_used[p.ti] || e_used[p.ei] || p.dist >= gate) continue;
    t_used[p.ti] = true;
    e_used[p.ei] = true;
    ++stats.matched;
    const auto& e = est.targets[p.ei];
    const double df = e.doppler_hz - truth[p.ti]->doppler_hz;
    const double dt = e.delay_rel_s - (truth[p.ti]->delay_s - los.delay_s);
    stats.sq_doppler_hz2 += df * df;
    stats.sq_delay_s2 += dt * dt;
    if (e.aoa_resolved) {
      // Spatial frequency lives on the circle (-pi, pi]; use the wrapped
      // angular distance.
      const double da =
          std::remainder(e.aoa_rad - truth[p.ti]->spatial_freq_rad, 2.0 * kPi);
      stats.sq_aoa_rad2 += da * da;
      ++stats.aoa_counted;
    }
  }
  stats.false_alarms = stats.estimates - stats.matched;
  return stats;
}

double nmse(double sum_sq_err, double sum_sq_truth) {
  if (sum_sq_truth <= 0.0) throw SpecError("nmse: zero truth energy");
  return sum_sq_err / sum_sq_truth;
}

// --- Monte-Carlo -----------------------------------------------------------

TrialOutcome run_trial(const ExperimentSpec& spec, Method method, double snr_db, int trial,
                       int snr_index) {
  TrialOutcome out;
  out.method = method;
  out.snr_db = snr_db;
  out.trial = trial;
  out.seed = derive_seed(spec.master_seed, static_cast<std::uint64_t>(snr_index),
                         static_cast<std::uint64_t>(trial));

  ScenarioConfig cfg = spec.scenario;
  cfg.rng_seed = out.seed;
  Rng rng(out.seed);

  // Leave headroom so delay + worst-case timing offset stays inside the CP.
  SceneConstraints scene = spec.scene;
  if (spec.offsets.to != ToModel::None) {
    const double to_max =
        spec.offsets.to_range_s >= 0 ? spec.offsets.to_range_s : 0.1 * cfg.cp_period_s;
    scene.delay_max_s =
        std::min(scene.delay_max_s, cfg.cp_period_s - to_max - 0.01 * cfg.cp_period_s);
  } else {
    scene.delay_max_s = std::min(scene.delay_max_s, 0.99 * cfg.cp_period_s);
  }
  const auto paths = make_random_paths(cfg, scene, rng);
  cfg.noise_variance = noise_variance_for_snr_db(paths, snr_db);
  const PathParams& los = los_path(paths);
  const int num_targets = spec.scene.num_targets;

  const OffsetTrace offsets = generate_offsets(cfg, spec.offsets, rng);
  const SymbolGrid symbols = generate_symbols(cfg, rng);
  const RxGrid rx = synthesize_rx(cfg, paths, offsets, symbols, rng);

  for (const auto& p : paths) {
    if (p.is_los) continue;
    out.sq_truth_doppler_hz2 += p.doppler_hz * p.doppler_hz;
    const double rel = p.delay_s - los.delay_s;
    out.sq_truth_delay_s2 += rel * rel;
  }

  const auto t0 = std::chrono::steady_clock::now();
  MirrorConfig mc = spec.mirror;
  if (method == Method::Ams) {
    // AMS averages over packets to estimate the LOS term, so the known
    // symbols must be removed first (they cancel only in the CACC path).
    const AmsGrids ams = ams_transform(equalize_symbols(rx, symbols));
    choose_m0_g0(ams.xi_ams, mc);
    const auto r = ams_estimate(ams, los.delay_s, cfg, mc, num_targets);
    out.estimates = r.estimates;
    out.candidates = r.candidates_evaluated;
  } else {
    const CaccGrid rho = cacc(rx, 0);
    XiGrid xi;
    switch (spec.filter) {
      case FilterKind::Butterworth: xi = highpass_butterworth(rho, HighpassConfig{}); break;
      case FilterKind::MeanSubtraction:
        xi = highpass_mean_subtraction(rho, spec.mean_sub_window);
        break;
      case FilterKind::None: xi = rho; break;
    }
    if (spec.auto_reference) mc.n0 = select_reference_index_n0(xi);
    choose_m0_g0(xi, mc);

    Algorithm1Result r;
    if (method == Method::Mirrored) {
      r = algorithm1(xi, los.spatial_freq_rad, los.delay_s, cfg, mc, num_targets);
    } else {
      r = conventional_estimate(xi, los.spatial_freq_rad, los.delay_s, cfg, mc, num_targets);
    }
    out.candidates = r.candidates_evaluated;
    out.estimates = r.estimates;

    if (spec.include_aoa && !out.estimates.targets.empty()) {
      const auto aoa = algorithm2(xi, out.estimates, spec.aoa, los.delay_s, cfg);
      out.candidates += aoa.candidates_evaluated;
      for (std::size_t l = 0; l < out.estimates.targets.size(); ++l) {
        out.estimates.targets[l].aoa_rad = aoa.aoas_rad[l];
        out.estimates.targets[l].aoa_resolved = aoa.resolved[l];
      }
    }
  }
  const auto t1 = std::chrono::steady_clock::now();
  out.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();

  out.complete = out.estimates.complete;
  out.match = match_targets(paths, out.estimates, cfg);

  if (spec.predict) {
    const auto rep = predict_scene_errors(cfg, paths, mc, spec.aoa, spec.include_aoa);
    out.predicted_var_doppler_hz2 = rep.predicted_var_doppler_hz2;
    out.predicted_var_delay_s2 = rep.predicted_var_delay_s2;
    out.predicted_var_aoa_rad2 = rep.predicted_var_aoa_rad2;
    out.aoa_prediction_saturated = rep.aoa_prediction_saturated;
  }
  return out;
}

ExperimentResult run_experiment(const ExperimentSpec& spec, int num_threads) {
  struct Job {
    int snr_index, trial;
    Method method;
  };
  std::vector<Job> jobs;
  for (int si = 0; si < static_cast<int>(spec.snr_db.size()); ++si)
    for (int t = 0; t < spec.trials; ++t)
      for (Method m : spec.methods) jobs.push_back({si, t, m});

  ExperimentResult result;
  result.rows.resize(jobs.size());
  if (num_threads < 1) num_threads = 1;
  num_threads = std::min<int>(num_threads, static_cast<int>(jobs.size()));
  if (num_threads == 0) return result;

  std::atomic<std::size_t> next{0};
  std::vector<std::string> errors(static_cast<std::size_t>(num_threads));
  auto worker = [&](int wid) {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      const Job& j = jobs[i];
      try {
        result.rows[i] =
            run_trial(spec, j.method, spec.snr_db[static_cast<std::size_t>(j.snr_index)],
                      j.trial, j.snr_index);
      } catch (const std::exception& ex) {
        errors[static_cast<std::size_t>(wid)] = ex.what();
        return;
      }
    }
  };
  if (num_threads == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < num_threads; ++w) pool.emplace_back(worker, w);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors)
    if (!e.empty()) throw SpecError("experiment trial failed: " + e);
  return result;
}

void write_experiment_csv(const ExperimentResult& result, std::ostream& os,
                          bool predict_columns) {
  os << "# experiment csv v1\n";
  os << "method,snr_db,trial,seed,complete,targets,estimates,matched,false_alarms,"
        "sq_err_doppler_hz2,sq_err_delay_s2,sq_err_aoa_rad2,aoa_counted,"
        "sq_truth_doppler_hz2,sq_truth_delay_s2,candidates,wall_ms";
  if (predict_columns)
    os << ",predicted_var_doppler_hz2,predicted_var_delay_s2,predicted_var_aoa_rad2,"
          "aoa_prediction_saturated";
  os << "\n";
  os.precision(17);
  for (const auto& r : result.rows) {
    os << to_string(r.method) << ',' << r.snr_db << ',' << r.trial << ',' << r.seed << ','
       << (r.complete ? 1 : 0) << ',' << r.match.targets << ',' << r.match.estimates << ','
       << r.match.matched << ',' << r.match.false_alarms << ',' << r.match.sq_doppler_hz2
       << ',' << r.match.sq_delay_s2 << ',' << r.match.sq_aoa_rad2 << ','
       << r.match.aoa_counted << ',' << r.sq_truth_doppler_hz2 << ',' << r.sq_truth_delay_s2
       << ',' << r.candidates << ',' << r.wall_ms;
    if (predict_columns)
      os << ',' << r.predicted_var_doppler_hz2 << ',' << r.predicted_var_delay_s2 << ','
         << r.predicted_var_aoa_rad2 << ',' << (r.aoa_prediction_saturated ? 1 : 0);
    os << "\n";
  }
}

std::vector<RocPoint> roc_curve(const ExperimentResult& result, Method method) {
  std::map<double, std::array<long, 4>> acc; // matched, targets, fa, estimates
  for (const auto& r : result.rows) {
    if (r.method != method) continue;
    auto& a = acc[r.snr_db];
    a[0] += r.match.matched;
    a[1] += r.match.targets;
    a[2] += r.match.false_alarms;
    a[3] += r.match.estimates;
  }
  std::vector<RocPoint> out;
  for (const auto& [snr, a] : acc) {
    RocPoint p;
    p.snr_db = snr;
    p.pd = a[1] > 0 ? static_cast<double>(a[0]) / a[1] : 0.0;
    p.pfa = a[3] > 0 ? static_cast<double>(a[2]) / a[3] : 0.0;
    out.push_back(p);
  }
  return out;
}

// --- Candidate-count / wall-time comparison --------------------------------

BenchComparison bench_candidate_counts(const ExperimentSpec& spec, int repeats) {
  BenchComparison out;
  for (int rep = 0; rep < repeats; ++rep) {
    const auto mirrored = run_trial([&] {
      ExperimentSpec s = spec;
      s.include_aoa = false;
      s.predict = false;
      return s;
    }(), Method::Mirrored, spec.snr_db.front(), rep, 0);
    const auto conventional = run_trial([&] {
      ExperimentSpec s = spec;
      s.include_aoa = false;
      s.predict = false;
      return s;
    }(), Method::Conventional, spec.snr_db.front(), rep, 0);
    out.mirrored_candidates = mirrored.candidates;
    out.conventional_candidates = conventional.candidates;
    out.mirrored_ms += mirrored.wall_ms / repeats;
    out.conventional_ms += conventional.wall_ms / repeats;
  }
  return out;
}

// --- CLI-facing serialization ----------------------------------------------

void write_estimates_csv(const EstimateSet& est, std::ostream& os) {
  os << "target_id,delay_s,doppler_hz,pair_score,aoa_rad,resolution_flag\n";
  os.precision(17);
  for (std::size_t i = 0; i < est.targets.size(); ++i) {
    const auto& t = est.targets[i];
    os << i << ',' << t.delay_abs_s << ',' << t.doppler_hz << ',' << t.pair_score << ','
       << t.aoa_rad << ',' << (t.aoa_resolved ? 1 : 0) << "\n";
  }
}

void write_spectrum_csv(const Eigen::MatrixXd& spectrum, std::ostream& os) {
  os.precision(17);
  for (Eigen::Index r = 0; r < spectrum.rows(); ++r) {
    for (Eigen::Index c = 0; c < spectrum.cols(); ++c) {
      if (c) os << ',';
      os << spectrum(r, c);
    }
    os << "\n";
  }
}

} // namespace upsense
