#pragma once

#include "upsense/analysis.hpp"
#include "upsense/aoa.hpp"
#include "upsense/baselines.hpp"
#include "upsense/cacc.hpp"
#include "upsense/mirrored_music.hpp"
#include "upsense/model.hpp"

#include <iosfwd>
#include <optional>

namespace upsense {

enum class Method { Mirrored, Conventional, Ams };

Method method_from_string(const std::string& name);
std::string to_string(Method method);

enum class FilterKind { Butterworth, MeanSubtraction, None };

/// Everything needed to reproduce one Monte-Carlo experiment.
struct ExperimentSpec {
  ScenarioConfig scenario = ScenarioConfig::desk_defaults();
  SceneConstraints scene;
  OffsetModel offsets;
  MirrorConfig mirror;
  AoAConfig aoa;
  FilterKind filter = FilterKind::Butterworth;
  int mean_sub_window = 33;       // packets, for FilterKind::MeanSubtraction
  double los_aoa_rad = kPi / 2.0; // known LOS bearing, used by `estimate`

  std::vector<double> snr_db{20.0};
  int trials = 100;
  std::vector<Method> methods{Method::Mirrored};
  bool include_aoa = true;
  bool predict = false;       // attach perturbation-theory columns
  bool auto_reference = true; // pick n0 by the DC-energy rule per trial
  std::uint64_t master_seed = 1;
};

/// Deterministic per-trial stream: splitmix64 over (master, snr index, trial).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b);

// --- Config files ----------------------------------------------------------

/// key = value lines; '#' comments; errors carry "path:line" context.
/// Unknown keys are errors. Lists are comma-separated.
void apply_config_file(ExperimentSpec& spec, const std::string& path);
void apply_key_value(ExperimentSpec& spec, const std::string& key, const std::string& value,
                     const std::string& context);

// --- Truth matching --------------------------------------------------------

/// Greedy nearest matching in normalized coordinates (doppler * T_A,
/// delay_rel / T); an estimate counts as detected when its normalized
/// squared distance is below gate.
struct MatchStats {
  int targets = 0;
  int estimates = 0;
  int matched = 0;
  int false_alarms = 0; // estimates left unmatched or outside the gate
  double sq_doppler_hz2 = 0.0; // summed squared errors over matched targets
  double sq_delay_s2 = 0.0;
  double sq_aoa_rad2 = 0.0;
  int aoa_counted = 0;
};

MatchStats match_targets(const std::vector<PathParams>& paths, const EstimateSet& est,
                         const ScenarioConfig& cfg, double gate = 1e-3);

/// Normalized mean-square error helpers over accumulated trial stats.
double nmse(double sum_sq_err, double sum_sq_truth);

// --- Monte-Carlo -----------------------------------------------------------

struct TrialOutcome {
  Method method = Method::Mirrored;
  double snr_db = 0.0;
  int trial = 0;
  std::uint64_t seed = 0;
  bool complete = false;
  MatchStats match;
  double sq_truth_doppler_hz2 = 0.0; // for NMSE normalization
  double sq_truth_delay_s2 = 0.0;
  long candidates = 0;
  double wall_ms = 0.0;
  double predicted_var_doppler_hz2 = 0.0;
  double predicted_var_delay_s2 = 0.0;
  double predicted_var_aoa_rad2 = 0.0;
  bool aoa_prediction_saturated = false;
  EstimateSet estimates; // not serialized to CSV
};

/// One full pipeline pass for a fixed scene/noise draw.
TrialOutcome run_trial(const ExperimentSpec& spec, Method method, double snr_db, int trial,
                       int snr_index);

struct ExperimentResult {
  std::vector<TrialOutcome> rows;
};

/// Deterministic sweep over snr x trials x methods; threads split trials.
ExperimentResult run_experiment(const ExperimentSpec& spec, int num_threads = 1);

void write_experiment_csv(const ExperimentResult& result, std::ostream& os,
                          bool predict_columns);

struct RocPoint {
  double snr_db = 0.0;
  double pd = 0.0;  // matched / targets
  double pfa = 0.0; // false alarms / estimates
};

std::vector<RocPoint> roc_curve(const ExperimentResult& result, Method method);

// --- Candidate-count / wall-time comparison --------------------------------

struct BenchComparison {
  long mirrored_candidates = 0;
  long conventional_candidates = 0;
  double mirrored_ms = 0.0;
  double conventional_ms = 0.0;
};

/// Mirrored vs conventional search on the same synthesized grid.
BenchComparison bench_candidate_counts(const ExperimentSpec& spec, int repeats = 3);

// --- CLI-facing serialization ----------------------------------------------

void write_estimates_csv(const EstimateSet& est, std::ostream& os);
void write_spectrum_csv(const Eigen::MatrixXd& spectrum, std::ostream& os);

} // namespace upsense
