#pragma once

#include "bayes.hpp"
#include "envgen.hpp"
#include "model_io.hpp"
#include "qwi.hpp"
#include "simulator.hpp"
#include "whittle.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace rblab {

enum class BaselineMethod { ExactJoint, LongRollout };
const char* to_string(BaselineMethod m);
BaselineMethod baseline_method_from_string(const std::string& s);

/// Where the true model of each sample path comes from.
enum class InstanceMode {
    Bayesian,  ///< passive rows drawn from the learner's Dirichlet prior, fresh per path
    Fixed,     ///< one generated environment per n, shared by all paths
};
const char* to_string(InstanceMode m);
InstanceMode instance_mode_from_string(const std::string& s);

/// Joint state at t = 1.
enum class InitialState {
    Stationary,  ///< state of the true model's index policy after a burn-in from all zeros
    Zero,        ///< every arm in state 0
};
const char* to_string(InitialState m);
InitialState initial_state_from_string(const std::string& s);

/// How the per-path regret R_p(t) is formed.
enum class RegretEstimator {
    Paired,    ///< cum_oracle(t) - cum_alg(t); the oracle replays the path's environment stream and initial state
    Baseline,  ///< t * J_hat - cum_alg(t)
};
const char* to_string(RegretEstimator m);
RegretEstimator regret_estimator_from_string(const std::string& s);

struct ExperimentConfig {
    EnvironmentKind environment = EnvironmentKind::A;
    std::vector<int> n_values;
    int S = 10;
    std::int64_t T = 5000;
    int num_sample_paths = 1;
    std::vector<std::string> algorithms;  ///< rb-tsde, qwi, whittle-oracle
    std::uint64_t master_seed = 0;
    BaselineMethod baseline_method = BaselineMethod::LongRollout;
    std::int64_t rollout_horizon = 1'000'000;
    int rollout_reps = 8;
    InstanceMode instance_mode = InstanceMode::Bayesian;
    LearnMode learn_mode = LearnMode::PassiveOnly;
    InitialState initial_state = InitialState::Stationary;
    std::int64_t initial_burn_in = 1000;
    RegretEstimator regret_estimator = RegretEstimator::Paired;
    double prior_concentration = 1.0;
    QwiOptions qwi;
    /// (a, b) pairs; when non-empty a QWI step-size grid is evaluated at the largest n.
    std::vector<std::pair<double, double>> qwi_grid;
    bool write_traces = false;
    /// Trend-check failures make run_experiment report failure.
    bool strict_trends = false;
    std::string output_dir = "results";

    /// Strict parsing: unknown keys are rejected, master_seed is required.
    static ExperimentConfig from_json(const Json& j);
    Json to_json() const;
    void validate() const;
};

struct GainEstimate {
    double mean = 0.0;
    double std_error = 0.0;
};

/// Gain of the index policy of `tables` on the true instance. Exact: joint
/// linear solve (tiny instances only). Rollout: `reps` independent runs of
/// `horizon` steps after horizon/10 burn-in steps each, from all zeros; the
/// standard error comes from 10 batch means per rep.
GainEstimate estimate_baseline_gain(const BanditInstance& instance, const WhittleTable& tables, BaselineMethod method,
                                    std::int64_t horizon, int reps, std::uint64_t seed);

/// Plays the index policy from all zeros for `steps` steps and returns the
/// final joint state.
JointState sample_initial_state(const BanditInstance& instance, const WhittleTable& tables, std::int64_t steps,
                                std::uint64_t seed);

/// One sample path of one n: cumulative reward per algorithm against the
/// path's baseline.
struct PathOutcome {
    int n = 0;
    int path = 0;
    std::uint64_t seed = 0;
    GainEstimate baseline;
    JointState initial;
    std::map<std::string, std::vector<double>> cumulative;  ///< algorithm -> cumulative reward per t
    std::map<std::string, int> episodes;                    ///< algorithm -> K_T (episodic learners)
    std::map<std::string, std::vector<std::int64_t>> episode_lengths;  ///< algorithm -> T_1..T_K
    std::vector<double> oracle_cumulative;  ///< true-model index policy on the same stream (paired estimator)
    int non_indexable_arms = 0;  ///< true-model arms failing the grid check ("unverified")
    std::map<std::string, std::string> trace_csv;      ///< filled when traces are enabled
    std::map<std::string, std::string> episodes_json;  ///< episodic learners only
};

struct RegretCurve {
    int n = 0;
    std::string algorithm;
    std::vector<double> mean;    ///< index t = 0..T, mean[0] = 0
    std::vector<double> std_error;
    double mean_over_sqrt(std::size_t t) const;
};

struct TrendCheck {
    int n = 0;
    std::string algorithm;
    double slope = 0.0;  ///< NaN when mean regret is not positive over the window
    double ratio = 0.0;  ///< (R(T)/sqrt T) / (R(T/2)/sqrt(T/2)), NaN unless R(T/2) > 0
    bool slope_ok = false;  ///< slope < 0.9
    bool ratio_ok = false;  ///< R(T)/sqrt T <= 1.3 R(T/2)/sqrt(T/2)
};

struct FitModel {
    bool available = false;
    std::vector<double> coefficients;
    double rmse = 0.0;
};

struct ScalingFit {
    FitModel linear;  ///< p0 + p1 n
    FitModel power;   ///< p0 + p1 n + p2 n^1.5
    std::string best;
};

/// Least squares fits of both scaling laws. Needs >= 3 points; the n^1.5 model
/// needs >= 4. Throws NumericalError on a rank-deficient design.
ScalingFit fit_scaling(const std::vector<double>& n, const std::vector<double>& y);

struct ExperimentResult {
    ExperimentConfig config;
    std::vector<RegretCurve> curves;  ///< ordered by (n, algorithm order in config)
    std::vector<TrendCheck> trends;
    std::map<std::string, ScalingFit> fits;  ///< per algorithm, when the n grid allows
    std::map<std::string, std::string> fit_errors;
    std::vector<std::map<std::string, double>> qwi_grid;
    std::vector<PathOutcome> paths;
    Json metadata;

    bool trends_ok() const;
};

/// Per-path work, independent of every other path.
PathOutcome run_sample_path(const ExperimentConfig& config, int n, int path);

/// R_p(t) for t = 1..T under the configured estimator.
double path_regret(const ExperimentConfig& config, const PathOutcome& path, const std::string& algorithm,
                   std::size_t t);

/// Reduction over path outcomes; invariant to the order of `paths`.
ExperimentResult aggregate(const ExperimentConfig& config, std::vector<PathOutcome> paths);

/// All paths over a pool of `jobs` threads (0 = hardware concurrency).
ExperimentResult run_experiment(const ExperimentConfig& config, int jobs = 0);

/// Least-squares slope of log R(t) against log t for t in [lo, hi]; 0 for a
/// window that is identically zero, NaN if any other value is not positive.
double loglog_slope(const std::vector<double>& curve, std::size_t lo, std::size_t hi);

/// Writes curves/, summary.csv, fit.json, the three SVG plots and
/// run_metadata.json (plus traces when enabled). Returns the summary JSON.
Json emit_results(const ExperimentResult& result, const std::filesystem::path& outdir);

/// Mean final-time QWI regret for each (a, b) on the paths of size n.
std::vector<std::map<std::string, double>> qwi_step_grid(const ExperimentConfig& config, int n,
                                                         const std::vector<std::pair<double, double>>& grid);

}  // namespace rblab
