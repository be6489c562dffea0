#include "harness.hpp"

#include "errors.hpp"
#include "mdp_eval.hpp"
#include "plot.hpp"
#include "rng.hpp"
#include "tsde.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <set>
#include <thread>

namespace rblab {

const char* to_string(BaselineMethod m)
{
    return m == BaselineMethod::ExactJoint ? "exact_joint" : "long_rollout";
}

BaselineMethod baseline_method_from_string(const std::string& s)
{
    if (s == "exact_joint")
        return BaselineMethod::ExactJoint;
    if (s == "long_rollout")
        return BaselineMethod::LongRollout;
    throw ValidationError("unknown baseline_gain_method '" + s + "' (expected exact_joint or long_rollout)");
}

const char* to_string(InstanceMode m)
{
    return m == InstanceMode::Bayesian ? "bayesian" : "fixed";
}

InstanceMode instance_mode_from_string(const std::string& s)
{
    if (s == "bayesian")
        return InstanceMode::Bayesian;
    if (s == "fixed")
        return InstanceMode::Fixed;
    throw ValidationError("unknown instance_mode '" + s + "' (expected bayesian or fixed)");
}

const char* to_string(InitialState m)
{
    return m == InitialState::Stationary ? "stationary" : "zero";
}

InitialState initial_state_from_string(const std::string& s)
{
    if (s == "stationary")
        return InitialState::Stationary;
    if (s == "zero")
        return InitialState::Zero;
    throw ValidationError("unknown initial_state '" + s + "' (expected stationary or zero)");
}

const char* to_string(RegretEstimator m) { return m == RegretEstimator::Paired ? "paired" : "baseline"; }

RegretEstimator regret_estimator_from_string(const std::string& s)
{
    if (s == "paired")
        return RegretEstimator::Paired;
    if (s == "baseline")
        return RegretEstimator::Baseline;
    throw ValidationError("unknown regret_estimator '" + s + "' (expected paired or baseline)");
}

JointState sample_initial_state(const BanditInstance& instance, const WhittleTable& tables, std::int64_t steps,
                                std::uint64_t seed)
{
    SimulatedEnvironment env(instance, seed);
    JointState state = env.reset();
    for (std::int64_t t = 0; t < steps; ++t)
        state.states = env.step(select_actions(tables, state, instance.budget)).next_states;
    return state;
}

namespace {

const std::set<std::string> kAlgorithms = {"rb-tsde", "qwi", "whittle-oracle"};

// Seed hierarchy: master -> n -> path -> stream.
std::uint64_t n_seed(const ExperimentConfig& c, int n)
{
    return derive_seed(c.master_seed, 1000 + static_cast<std::uint64_t>(n));
}

std::uint64_t path_seed(const ExperimentConfig& c, int n, int path)
{
    return derive_seed(n_seed(c, n), static_cast<std::uint64_t>(path));
}

std::string fmt(const char* f, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof(buf), f, v);
    return buf;
}

[[noreturn]] void rethrow_with_context(std::exception_ptr ep, const std::string& ctx)
{
    try {
        std::rethrow_exception(ep);
    } catch (const InvariantViolation& e) {
        throw InvariantViolation(ctx + e.what());
    } catch (const NumericalError& e) {
        throw NumericalError(ctx + e.what());
    } catch (const GuardrailError& e) {
        throw GuardrailError(ctx + e.what());
    } catch (const ValidationError& e) {
        throw ValidationError(ctx + e.what());
    } catch (const IoError& e) {
        throw IoError(ctx + e.what());
    } catch (const std::exception& e) {
        throw std::runtime_error(ctx + e.what());
    }
}

// Runs fn(0..count-1) on `jobs` threads. The failure with the lowest index is
// rethrown, so error reports do not depend on scheduling.
template <class Fn>
void parallel_for(std::size_t count, int jobs, Fn fn)
{
    if (jobs <= 0)
        jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    jobs = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(jobs), std::max<std::size_t>(count, 1)));
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k = next++; k < count; k = next++) {
            try {
                fn(k);
            } catch (...) {
                errors[k] = std::current_exception();
            }
        }
    };
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int j = 0; j < jobs; ++j)
            pool.emplace_back(worker);
        for (auto& t : pool)
            t.join();
    }
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
}

struct Truth {
    BanditInstance instance;
    WhittleTable table;
    GainEstimate baseline;
    JointState initial;
    int non_indexable = 0;
};

RewardModel reward_model_for(EnvironmentKind kind)
{
    return kind == EnvironmentKind::A ? RewardModel::A : RewardModel::B;
}

BanditInstance draw_bayesian_instance(const ExperimentConfig& c, int n, Rng& rng)
{
    BanditInstance inst;
    inst.budget = 1;
    inst.reward_model = reward_model_for(c.environment);
    inst.r_max = static_cast<double>(c.S - 1) * (c.S - 1);
    const Vector alpha = Vector::Constant(c.S, c.prior_concentration);
    for (int i = 0; i < n; ++i) {
        Matrix p(c.S, c.S);
        for (int s = 0; s < c.S; ++s)
            p.row(s) = sample_dirichlet(alpha, rng).transpose();
        inst.arms.push_back(Arm{p, reset_matrix(c.S), environment_passive_rewards(c.environment, c.S),
                                environment_active_rewards(c.environment, c.S)});
    }
    return inst;
}

Truth make_truth(const ExperimentConfig& c, const BanditInstance& instance, std::uint64_t seed)
{
    Truth t;
    t.instance = instance;
    t.table = whittle_table(instance);
    t.baseline = estimate_baseline_gain(instance, t.table, c.baseline_method, c.rollout_horizon, c.rollout_reps,
                                        derive_seed(seed, stream::baseline));
    if (c.initial_state == InitialState::Stationary)
        t.initial = sample_initial_state(instance, t.table, c.initial_burn_in, derive_seed(seed, stream::initial_state));
    else
        t.initial.states.assign(instance.num_arms(), 0);
    const double r_max = instance.reward_bound();
    for (const auto& arm : instance.arms) {
        const auto [lo, hi] = default_bracket(arm, r_max);
        if (!indexability_check(arm, uniform_grid(lo, hi, 41)).indexable)
            ++t.non_indexable;
    }
    return t;
}

Truth truth_for_path(const ExperimentConfig& c, int n, int path)
{
    if (c.instance_mode == InstanceMode::Fixed) {
        Rng rng = make_rng(derive_seed(n_seed(c, n), stream::true_model));
        return make_truth(c, make_environment(c.environment, n, c.S, rng), n_seed(c, n));
    }
    const auto ps = path_seed(c, n, path);
    Rng rng = make_rng(derive_seed(ps, stream::true_model));
    return make_truth(c, draw_bayesian_instance(c, n, rng), ps);
}

PathOutcome run_path_with_truth(const ExperimentConfig& c, int n, int path, const Truth& truth)
{
    PathOutcome out;
    out.n = n;
    out.path = path;
    out.seed = path_seed(c, n, path);
    out.baseline = truth.baseline;
    out.initial = truth.initial;
    out.non_indexable_arms = truth.non_indexable;
    const auto env_seed = derive_seed(out.seed, stream::environment);
    const auto learner_seed = derive_seed(out.seed, stream::learner);
    const LearnerSpec spec = LearnerSpec::from_instance(truth.instance);

    for (const auto& alg : c.algorithms) {
        SimulatedEnvironment env(truth.instance, env_seed, truth.initial);
        RunTrace trace;
        if (alg == "rb-tsde") {
            std::vector<Matrix> known;
            if (c.learn_mode == LearnMode::PassiveOnly)
                for (const auto& arm : truth.instance.arms)
                    known.push_back(arm.p_active);
            auto prior = PosteriorState::init_prior(spec.num_states, c.prior_concentration, c.learn_mode, known);
            trace = run_tsde(env, spec, std::move(prior), c.T, learner_seed);
            out.episodes[alg] = static_cast<int>(trace.episodes.size());
            auto& lengths = out.episode_lengths[alg];
            for (const auto& e : trace.episodes)
                lengths.push_back(e.length);
        } else if (alg == "qwi") {
            trace = run_qwi(env, spec, c.T, learner_seed, c.qwi);
        } else {
            trace = run_index_policy(env, truth.table, c.T);
        }
        if (c.write_traces) {
            out.trace_csv[alg] = trace_csv(trace);
            if (!trace.episodes.empty())
                out.episodes_json[alg] = dump_json(episodes_json(trace));
        }
        if (alg == "whittle-oracle" && c.regret_estimator == RegretEstimator::Paired)
            out.oracle_cumulative = trace.cumulative_reward;
        out.cumulative[alg] = std::move(trace.cumulative_reward);
    }
    if (c.regret_estimator == RegretEstimator::Paired && out.oracle_cumulative.empty()) {
        SimulatedEnvironment env(truth.instance, env_seed, truth.initial);
        out.oracle_cumulative = run_index_policy(env, truth.table, c.T).cumulative_reward;
    }
    return out;
}

std::string context(const ExperimentConfig& c, int n, int path)
{
    char buf[160];
    std::snprintf(buf, sizeof(buf), "sample path %d (n = %d, master_seed = %llu, path seed = %llu): ", path, n,
                  static_cast<unsigned long long>(c.master_seed),
                  static_cast<unsigned long long>(path_seed(c, n, path)));
    return buf;
}

template <class T>
T get_or(const Json& j, const char* key, T fallback)
{
    return j.contains(key) ? j.at(key).get<T>() : fallback;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const Json& j)
{
    if (!j.is_object())
        throw ValidationError("config: expected a JSON object");
    static const std::set<std::string> known = {
        "schema_version", "environment", "n",           "S",           "T",          "num_sample_paths",
        "algorithms",     "master_seed", "baseline_gain_method", "rollout_horizon", "rollout_reps", "instance_mode",
        "learn_mode",     "initial_state", "initial_burn_in", "regret_estimator", "prior_concentration", "qwi", "qwi_grid",    "write_traces", "strict_trends",
        "output_dir"};
    for (const auto& [key, _] : j.items())
        if (!known.count(key))
            throw ValidationError("config: unknown key '" + key + "'");
    if (!j.contains("master_seed"))
        throw ValidationError("config: master_seed is required");
    if (j.contains("schema_version") && j.at("schema_version").get<int>() != kSchemaVersion)
        throw ValidationError("config: unsupported schema_version");

    ExperimentConfig c;
    try {
        c.environment = environment_kind_from_string(get_or<std::string>(j, "environment", "A"));
        if (!j.contains("n"))
            throw ValidationError("config: n is required");
        if (j.at("n").is_array())
            c.n_values = j.at("n").get<std::vector<int>>();
        else
            c.n_values = {j.at("n").get<int>()};
        c.S = get_or(j, "S", c.S);
        c.T = get_or(j, "T", c.T);
        c.num_sample_paths = get_or(j, "num_sample_paths", c.num_sample_paths);
        c.algorithms = get_or(j, "algorithms", std::vector<std::string>{"rb-tsde", "qwi"});
        c.master_seed = j.at("master_seed").get<std::uint64_t>();
        c.baseline_method = baseline_method_from_string(get_or<std::string>(j, "baseline_gain_method", "long_rollout"));
        c.rollout_horizon = get_or(j, "rollout_horizon", c.rollout_horizon);
        c.rollout_reps = get_or(j, "rollout_reps", c.rollout_reps);
        c.instance_mode = instance_mode_from_string(get_or<std::string>(j, "instance_mode", "bayesian"));
        c.learn_mode = learn_mode_from_string(get_or<std::string>(j, "learn_mode", "passive_only"));
        c.initial_state = initial_state_from_string(get_or<std::string>(j, "initial_state", "stationary"));
        c.initial_burn_in = get_or(j, "initial_burn_in", c.initial_burn_in);
        c.regret_estimator = regret_estimator_from_string(get_or<std::string>(j, "regret_estimator", "paired"));
        c.prior_concentration = get_or(j, "prior_concentration", c.prior_concentration);
        if (j.contains("qwi")) {
            const auto& q = j.at("qwi");
            static const std::set<std::string> qkeys = {"step_fast", "step_slow", "epsilon", "initial_index",
                                                        "reference_state", "index_bound_factor"};
            for (const auto& [key, _] : q.items())
                if (!qkeys.count(key))
                    throw ValidationError("config: unknown qwi key '" + key + "'");
            c.qwi.step_fast = get_or(q, "step_fast", c.qwi.step_fast);
            c.qwi.step_slow = get_or(q, "step_slow", c.qwi.step_slow);
            c.qwi.epsilon = get_or(q, "epsilon", c.qwi.epsilon);
            c.qwi.initial_index = get_or(q, "initial_index", c.qwi.initial_index);
            c.qwi.reference_state = get_or(q, "reference_state", c.qwi.reference_state);
            c.qwi.index_bound_factor = get_or(q, "index_bound_factor", c.qwi.index_bound_factor);
        }
        if (j.contains("qwi_grid"))
            for (const auto& pair : j.at("qwi_grid")) {
                if (!pair.is_array() || pair.size() != 2)
                    throw ValidationError("config: qwi_grid entries must be [a, b] pairs");
                c.qwi_grid.emplace_back(pair[0].get<double>(), pair[1].get<double>());
            }
        c.write_traces = get_or(j, "write_traces", c.write_traces);
        c.strict_trends = get_or(j, "strict_trends", c.strict_trends);
        c.output_dir = get_or(j, "output_dir", c.output_dir);
    } catch (const Json::exception& e) {
        throw ValidationError(std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

Json ExperimentConfig::to_json() const
{
    Json j;
    j["schema_version"] = kSchemaVersion;
    j["environment"] = rblab::to_string(environment);
    j["n"] = n_values;
    j["S"] = S;
    j["T"] = T;
    j["num_sample_paths"] = num_sample_paths;
    j["algorithms"] = algorithms;
    j["master_seed"] = master_seed;
    j["baseline_gain_method"] = rblab::to_string(baseline_method);
    j["rollout_horizon"] = rollout_horizon;
    j["rollout_reps"] = rollout_reps;
    j["instance_mode"] = rblab::to_string(instance_mode);
    j["learn_mode"] = rblab::to_string(learn_mode);
    j["initial_state"] = rblab::to_string(initial_state);
    j["initial_burn_in"] = initial_burn_in;
    j["regret_estimator"] = rblab::to_string(regret_estimator);
    j["prior_concentration"] = prior_concentration;
    j["qwi"] = {{"step_fast", qwi.step_fast},
                {"step_slow", qwi.step_slow},
                {"epsilon", qwi.epsilon},
                {"initial_index", qwi.initial_index},
                {"reference_state", qwi.reference_state},
                {"index_bound_factor", qwi.index_bound_factor}};
    Json grid = Json::array();
    for (const auto& [a, b] : qwi_grid)
        grid.push_back({a, b});
    j["qwi_grid"] = grid;
    j["write_traces"] = write_traces;
    j["strict_trends"] = strict_trends;
    j["output_dir"] = output_dir;
    return j;
}

void ExperimentConfig::validate() const
{
    if (n_values.empty())
        throw ValidationError("config: n list is empty");
    for (int n : n_values)
        if (n < 1)
            throw ValidationError("config: every n must be >= 1");
    if (std::set<int>(n_values.begin(), n_values.end()).size() != n_values.size())
        throw ValidationError("config: duplicate n values");
    if (S < 2)
        throw ValidationError("config: S must be >= 2");
    if (T < 1)
        throw ValidationError("config: T must be >= 1");
    if (num_sample_paths < 1)
        throw ValidationError("config: num_sample_paths must be >= 1");
    if (algorithms.empty())
        throw ValidationError("config: algorithms list is empty");
    for (const auto& a : algorithms)
        if (!kAlgorithms.count(a))
            throw ValidationError("config: unknown algorithm '" + a + "' (expected rb-tsde, qwi or whittle-oracle)");
    if (std::set<std::string>(algorithms.begin(), algorithms.end()).size() != algorithms.size())
        throw ValidationError("config: duplicate algorithms");
    if (rollout_horizon < 10)
        throw ValidationError("config: rollout_horizon must be >= 10");
    if (rollout_reps < 1)
        throw ValidationError("config: rollout_reps must be >= 1");
    if (initial_burn_in < 0)
        throw ValidationError("config: initial_burn_in must be >= 0");
    if (!(prior_concentration > 0.0))
        throw ValidationError("config: prior_concentration must be positive");
    if (!(qwi.step_fast >= 0.0 && qwi.step_fast <= 1.0 && qwi.step_slow >= 0.0 && qwi.step_slow <= 1.0))
        throw ValidationError("config: qwi step sizes must lie in [0, 1]");
    if (!(qwi.epsilon >= 0.0 && qwi.epsilon <= 1.0))
        throw ValidationError("config: qwi epsilon must lie in [0, 1]");
    if (!(qwi.index_bound_factor >= 0.0))
        throw ValidationError("config: qwi index_bound_factor must be non-negative");
    if (qwi.reference_state < 0 || qwi.reference_state >= S)
        throw ValidationError("config: qwi reference_state out of range");
    for (const auto& [a, b] : qwi_grid)
        if (!(a >= 0.0 && a <= 1.0 && b >= 0.0 && b <= 1.0))
            throw ValidationError("config: qwi_grid step sizes must lie in [0, 1]");
    if (output_dir.empty())
        throw ValidationError("config: output_dir is empty");
}

GainEstimate estimate_baseline_gain(const BanditInstance& instance, const WhittleTable& tables, BaselineMethod method,
                                    std::int64_t horizon, int reps, std::uint64_t seed)
{
    if (static_cast<int>(tables.indices.size()) != instance.num_arms())
        throw ValidationError("estimate_baseline_gain: table count differs from arm count");
    if (method == BaselineMethod::ExactJoint) {
        try {
            return {joint_policy_gain(instance, tables), 0.0};
        } catch (const GuardrailError& e) {
            throw GuardrailError(std::string(e.what()) + "; use baseline_gain_method long_rollout");
        }
    }
    if (horizon < 1 || reps < 1)
        throw ValidationError("estimate_baseline_gain: horizon and reps must be positive");

    const int n = instance.num_arms();
    const int m = instance.budget;
    // Alias tables: one 64-bit draw picks a column with the high word and
    // accepts it or its alias with the low word.
    struct ArmTables {
        int S;
        std::vector<std::uint32_t> threshold[2];  // S*S, row-major
        std::vector<int> alias[2];
        std::vector<double> reward[2];
        std::vector<double> index;
    };
    std::vector<ArmTables> arms(n);
    for (int i = 0; i < n; ++i) {
        const Arm& arm = instance.arms[i];
        auto& t = arms[i];
        t.S = arm.num_states();
        t.index.assign(tables.indices[i].data(), tables.indices[i].data() + t.S);
        for (int a = 0; a < 2; ++a) {
            const Matrix& p = arm.transitions(a);
            t.threshold[a].resize(static_cast<std::size_t>(t.S) * t.S);
            t.alias[a].resize(static_cast<std::size_t>(t.S) * t.S);
            t.reward[a].resize(t.S);
            for (int s = 0; s < t.S; ++s) {
                t.reward[a][s] = arm.reward(s, a);
                std::vector<double> scaled(t.S);
                std::vector<int> small, large;
                for (int z = 0; z < t.S; ++z) {
                    scaled[z] = p(s, z) * t.S;
                    (scaled[z] < 1.0 ? small : large).push_back(z);
                }
                std::uint32_t* thr = t.threshold[a].data() + static_cast<std::size_t>(s) * t.S;
                int* al = t.alias[a].data() + static_cast<std::size_t>(s) * t.S;
                while (!small.empty() && !large.empty()) {
                    const int lo = small.back(), hi = large.back();
                    small.pop_back();
                    thr[lo] = static_cast<std::uint32_t>(std::ldexp(scaled[lo], 32));
                    al[lo] = hi;
                    scaled[hi] -= 1.0 - scaled[lo];
                    if (scaled[hi] < 1.0) {
                        large.pop_back();
                        small.push_back(hi);
                    }
                }
                for (int z : large) {
                    thr[z] = 0xffffffffu;
                    al[z] = z;
                }
                // Leftovers from rounding keep their own column.
                for (int z : small) {
                    thr[z] = 0xffffffffu;
                    al[z] = z;
                }
            }
        }
    }

    // Standard error from batch means: each rep is cut into kBatches equal
    // batches; a trailing remainder shorter than a batch is dropped.
    constexpr std::int64_t kBatches = 10;
    const std::int64_t batch_len = std::max<std::int64_t>(1, horizon / kBatches);
    std::vector<double> means;
    std::vector<int> state(n), action(n), order(n);
    std::vector<double> prio(n);
    const std::int64_t burn_in = horizon / 10;
    for (int r = 0; r < reps; ++r) {
        Rng rng = make_rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
        std::fill(state.begin(), state.end(), 0);
        double batch = 0.0;
        std::int64_t in_batch = 0;
        for (std::int64_t t = 0; t < burn_in + horizon; ++t) {
            std::fill(action.begin(), action.end(), 0);
            if (m == 1) {
                int best = 0;
                for (int i = 1; i < n; ++i)
                    if (arms[i].index[state[i]] > arms[best].index[state[best]])
                        best = i;
                action[best] = 1;
            } else if (m > 0) {
                for (int i = 0; i < n; ++i) {
                    prio[i] = arms[i].index[state[i]];
                    order[i] = i;
                }
                std::partial_sort(order.begin(), order.begin() + m, order.end(), [&](int a, int b) {
                    return prio[a] > prio[b] || (prio[a] == prio[b] && a < b);
                });
                for (int k = 0; k < m; ++k)
                    action[order[k]] = 1;
            }
            double reward = 0.0;
            for (int i = 0; i < n; ++i) {
                const auto& at = arms[i];
                const int a = action[i];
                const int s = state[i];
                reward += at.reward[a][s];
                const std::uint64_t x = rng();
                const auto col = static_cast<int>(((x >> 32) * static_cast<std::uint64_t>(at.S)) >> 32);
                const std::size_t k = static_cast<std::size_t>(s) * at.S + col;
                state[i] = static_cast<std::uint32_t>(x) < at.threshold[a][k] ? col : at.alias[a][k];
            }
            if (t >= burn_in) {
                batch += reward;
                if (++in_batch == batch_len) {
                    means.push_back(batch / static_cast<double>(batch_len));
                    batch = 0.0;
                    in_batch = 0;
                }
            }
        }
    }
    GainEstimate g;
    const double k = static_cast<double>(means.size());
    for (double v : means)
        g.mean += v;
    g.mean /= k;
    if (means.size() > 1) {
        double ss = 0.0;
        for (double v : means)
            ss += (v - g.mean) * (v - g.mean);
        g.std_error = std::sqrt(ss / (k - 1.0) / k);
    }
    return g;
}

double RegretCurve::mean_over_sqrt(std::size_t t) const
{
    return t == 0 ? 0.0 : mean[t] / std::sqrt(static_cast<double>(t));
}

bool ExperimentResult::trends_ok() const
{
    for (const auto& t : trends)
        if (!t.slope_ok || !t.ratio_ok)
            return false;
    return true;
}

PathOutcome run_sample_path(const ExperimentConfig& config, int n, int path)
{
    try {
        const Truth truth = truth_for_path(config, n, path);
        return run_path_with_truth(config, n, path, truth);
    } catch (...) {
        rethrow_with_context(std::current_exception(), context(config, n, path));
    }
}

double loglog_slope(const std::vector<double>& curve, std::size_t lo, std::size_t hi)
{
    if (lo < 1 || hi >= curve.size() || hi <= lo)
        throw ValidationError("loglog_slope: window out of range");
    if (std::all_of(curve.begin() + lo, curve.begin() + hi + 1, [](double v) { return v == 0.0; }))
        return 0.0;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double k = static_cast<double>(hi - lo + 1);
    for (std::size_t t = lo; t <= hi; ++t) {
        if (!(curve[t] > 0.0))
            return std::nan("");
        const double x = std::log(static_cast<double>(t));
        const double y = std::log(curve[t]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (k * sxy - sx * sy) / (k * sxx - sx * sx);
}

ScalingFit fit_scaling(const std::vector<double>& n, const std::vector<double>& y)
{
    if (n.size() != y.size())
        throw ValidationError("fit_scaling: n and regret lists differ in length");
    if (n.size() < 3)
        throw ValidationError("fit_scaling: needs at least 3 points");
    for (double v : n)
        if (!(v >= 0.0) || !std::isfinite(v))
            throw ValidationError("fit_scaling: n values must be finite and non-negative");
    const Eigen::Index k = static_cast<Eigen::Index>(n.size());
    Vector rhs(k);
    for (Eigen::Index i = 0; i < k; ++i)
        rhs(i) = y[i];

    auto solve = [&](int cols) {
        Matrix X(k, cols);
        for (Eigen::Index i = 0; i < k; ++i) {
            X(i, 0) = 1.0;
            X(i, 1) = n[i];
            if (cols == 3)
                X(i, 2) = std::pow(n[i], 1.5);
        }
        Eigen::ColPivHouseholderQR<Matrix> qr(X);
        qr.setThreshold(1e-10);
        if (qr.rank() < cols)
            throw NumericalError("fit_scaling: rank-deficient design (" + std::to_string(cols) +
                                 " coefficients, rank " + std::to_string(qr.rank()) + ")");
        const Vector coef = qr.solve(rhs);
        FitModel f;
        f.available = true;
        f.coefficients.assign(coef.data(), coef.data() + cols);
        f.rmse = std::sqrt((X * coef - rhs).squaredNorm() / static_cast<double>(k));
        return f;
    };

    ScalingFit fit;
    fit.linear = solve(2);
    fit.best = "linear";
    if (k >= 4) {
        fit.power = solve(3);
        if (fit.power.rmse < fit.linear.rmse)
            fit.best = "n^1.5";
    }
    return fit;
}

double path_regret(const ExperimentConfig& config, const PathOutcome& path, const std::string& algorithm,
                   std::size_t t)
{
    const auto& cum = path.cumulative.at(algorithm);
    if (config.regret_estimator == RegretEstimator::Paired)
        return path.oracle_cumulative[t - 1] - cum[t - 1];
    return static_cast<double>(t) * path.baseline.mean - cum[t - 1];
}

ExperimentResult aggregate(const ExperimentConfig& config, std::vector<PathOutcome> paths)
{
    std::sort(paths.begin(), paths.end(),
              [](const PathOutcome& a, const PathOutcome& b) { return std::tie(a.n, a.path) < std::tie(b.n, b.path); });
    ExperimentResult res;
    res.config = config;
    const auto T = static_cast<std::size_t>(config.T);
    const bool paired = config.regret_estimator == RegretEstimator::Paired;

    Json kt = Json::array();
    Json baselines = Json::array();
    Json indexability = Json::array();
    for (int n : config.n_values) {
        std::vector<const PathOutcome*> mine;
        for (const auto& p : paths)
            if (p.n == n)
                mine.push_back(&p);
        if (mine.empty())
            throw ValidationError("aggregate: no sample paths for n = " + std::to_string(n));
        const double P = static_cast<double>(mine.size());
        double se2 = 0.0;
        int non_indexable = 0;
        for (const auto* p : mine) {
            se2 += p->baseline.std_error * p->baseline.std_error;
            non_indexable += p->non_indexable_arms;
            baselines.push_back({{"n", n},
                                 {"path", p->path},
                                 {"seed", p->seed},
                                 {"gain", p->baseline.mean},
                                 {"stderr", p->baseline.std_error}});
        }
        indexability.push_back({{"n", n}, {"unverified_arms", non_indexable}});

        for (const auto& alg : config.algorithms) {
            RegretCurve curve;
            curve.n = n;
            curve.algorithm = alg;
            curve.mean.assign(T + 1, 0.0);
            curve.std_error.assign(T + 1, 0.0);
            std::vector<double> sum(T + 1, 0.0), sumsq(T + 1, 0.0);
            for (const auto* p : mine) {
                if (p->cumulative.at(alg).size() != T)
                    throw InvariantViolation("aggregate: trace length differs from T");
                if (paired && p->oracle_cumulative.size() != T)
                    throw InvariantViolation("aggregate: oracle trace length differs from T");
                for (std::size_t t = 1; t <= T; ++t)
                    sum[t] += path_regret(config, *p, alg, t);
            }
            for (std::size_t t = 1; t <= T; ++t)
                curve.mean[t] = sum[t] / P;
            for (const auto* p : mine)
                for (std::size_t t = 1; t <= T; ++t) {
                    const double d = path_regret(config, *p, alg, t) - curve.mean[t];
                    sumsq[t] += d * d;
                }
            for (std::size_t t = 1; t <= T; ++t) {
                const double var = mine.size() > 1 ? sumsq[t] / (P - 1.0) / P : 0.0;
                const double tt = static_cast<double>(t);
                curve.std_error[t] = std::sqrt(var + (paired ? 0.0 : tt * tt * se2 / (P * P)));
            }

            if (alg != "whittle-oracle" && T >= 10) {
                TrendCheck tc;
                tc.n = n;
                tc.algorithm = alg;
                tc.slope = loglog_slope(curve.mean, T / 5, T);
                const double half = curve.mean_over_sqrt(T / 2);
                const double full = curve.mean_over_sqrt(T);
                tc.ratio = half > 0.0 ? full / half : std::nan("");
                tc.slope_ok = std::isfinite(tc.slope) && tc.slope < 0.9;
                tc.ratio_ok = full <= 1.3 * half;
                res.trends.push_back(tc);
            }
            auto it = mine.front()->episodes.find(alg);
            if (it != mine.front()->episodes.end()) {
                int max_k = 0;
                double mean_k = 0.0;
                for (const auto* p : mine) {
                    max_k = std::max(max_k, p->episodes.at(alg));
                    mean_k += p->episodes.at(alg);
                }
                kt.push_back({{"n", n},
                              {"algorithm", alg},
                              {"mean_K_T", mean_k / P},
                              {"max_K_T", max_k},
                              {"bound", config.T >= 2 ? episode_count_bound(n * config.S, config.T) : 0.0}});
            }
            res.curves.push_back(std::move(curve));
        }
    }

    if (config.n_values.size() >= 3) {
        for (const auto& alg : config.algorithms) {
            std::vector<double> ns, ys;
            for (const auto& c : res.curves)
                if (c.algorithm == alg) {
                    ns.push_back(c.n);
                    ys.push_back(c.mean[T]);
                }
            try {
                res.fits[alg] = fit_scaling(ns, ys);
            } catch (const std::exception& e) {
                res.fit_errors[alg] = e.what();
            }
        }
    } else {
        for (const auto& alg : config.algorithms)
            res.fit_errors[alg] = "needs at least 3 values of n";
    }

    res.metadata["episodes"] = kt;
    res.metadata["baseline_gains"] = baselines;
    res.metadata["indexability"] = indexability;
    res.paths = std::move(paths);
    return res;
}

std::vector<std::map<std::string, double>> qwi_step_grid(const ExperimentConfig& config, int n,
                                                         const std::vector<std::pair<double, double>>& grid)
{
    std::vector<std::map<std::string, double>> out;
    std::vector<Truth> truths;
    for (int p = 0; p < config.num_sample_paths; ++p)
        truths.push_back(truth_for_path(config, n, p));
    for (const auto& [a, b] : grid) {
        ExperimentConfig c = config;
        c.algorithms = {"qwi"};
        c.qwi.step_fast = a;
        c.qwi.step_slow = b;
        double total = 0.0;
        for (int p = 0; p < config.num_sample_paths; ++p) {
            const auto o = run_path_with_truth(c, n, p, truths[p]);
            total += path_regret(c, o, "qwi", static_cast<std::size_t>(c.T));
        }
        out.push_back({{"n", n}, {"step_fast", a}, {"step_slow", b}, {"regret_T", total / config.num_sample_paths}});
    }
    return out;
}

ExperimentResult run_experiment(const ExperimentConfig& config, int jobs)
{
    config.validate();
    struct Task {
        int n;
        int path;
    };
    std::vector<Task> tasks;
    for (int n : config.n_values)
        for (int p = 0; p < config.num_sample_paths; ++p)
            tasks.push_back({n, p});

    std::map<int, Truth> fixed;
    if (config.instance_mode == InstanceMode::Fixed) {
        std::vector<Truth> truths(config.n_values.size());
        parallel_for(truths.size(), jobs,
                     [&](std::size_t k) { truths[k] = truth_for_path(config, config.n_values[k], 0); });
        for (std::size_t k = 0; k < truths.size(); ++k)
            fixed[config.n_values[k]] = std::move(truths[k]);
    }

    std::vector<PathOutcome> outcomes(tasks.size());
    parallel_for(tasks.size(), jobs, [&](std::size_t k) {
        const auto [n, p] = tasks[k];
        try {
            outcomes[k] = config.instance_mode == InstanceMode::Fixed
                              ? run_path_with_truth(config, n, p, fixed.at(n))
                              : run_path_with_truth(config, n, p, truth_for_path(config, n, p));
        } catch (...) {
            rethrow_with_context(std::current_exception(), context(config, n, p));
        }
    });

    ExperimentResult res = aggregate(config, std::move(outcomes));
    if (!config.qwi_grid.empty()) {
        const int n = *std::max_element(config.n_values.begin(), config.n_values.end());
        res.qwi_grid = qwi_step_grid(config, n, config.qwi_grid);
    }
    return res;
}

namespace {

Json fit_json(const FitModel& f)
{
    if (!f.available)
        return nullptr;
    return {{"coefficients", f.coefficients}, {"rmse", f.rmse}};
}

std::string curve_name(const RegretCurve& c)
{
    return "n" + std::to_string(c.n) + "_" + c.algorithm;
}

}  // namespace

Json emit_results(const ExperimentResult& result, const std::filesystem::path& outdir)
{
    namespace fs = std::filesystem;
    if (result.curves.empty())
        throw ValidationError("emit_results: no curves");
    std::error_code ec;
    fs::create_directories(outdir / "curves", ec);
    if (ec)
        throw IoError("cannot create output directory " + outdir.string() + ": " + ec.message());
    const auto& cfg = result.config;
    const std::size_t T = static_cast<std::size_t>(cfg.T);
    const std::string env = to_string(cfg.environment);

    for (const auto& c : result.curves) {
        std::string csv = "t,mean,stderr,mean_over_sqrt_t\n";
        for (std::size_t t = 0; t <= T; ++t)
            csv += std::to_string(t) + "," + fmt("%.12g", c.mean[t]) + "," + fmt("%.12g", c.std_error[t]) + "," +
                   fmt("%.12g", c.mean_over_sqrt(t)) + "\n";
        write_text_file(outdir / "curves" / (curve_name(c) + ".csv"), csv);
    }

    std::string summary = "n,algorithm,regret_T,stderr_T\n";
    Json rows = Json::array();
    for (const auto& c : result.curves) {
        summary += std::to_string(c.n) + "," + c.algorithm + "," + fmt("%.12g", c.mean[T]) + "," +
                   fmt("%.12g", c.std_error[T]) + "\n";
        rows.push_back({{"n", c.n}, {"algorithm", c.algorithm}, {"regret_T", c.mean[T]}, {"stderr_T", c.std_error[T]}});
    }
    write_text_file(outdir / "summary.csv", summary);

    Json fits = Json::object();
    for (const auto& alg : cfg.algorithms) {
        Json f;
        if (auto it = result.fits.find(alg); it != result.fits.end()) {
            f["linear"] = fit_json(it->second.linear);
            f["n^1.5"] = fit_json(it->second.power);
            f["best"] = it->second.best;
        } else {
            f["error"] = result.fit_errors.count(alg) ? result.fit_errors.at(alg) : "not fitted";
        }
        fits[alg] = f;
    }
    Json fit_doc = {{"schema_version", kSchemaVersion}, {"models", {"p0 + p1 n", "p0 + p1 n + p2 n^1.5"}}, {"fits", fits}};
    write_text_file(outdir / "fit.json", dump_json(fit_doc));

    const std::size_t stride = std::max<std::size_t>(1, T / 500);
    LineChart regret{"Regret vs T (Environment " + env + ")", "T", "Bayesian regret R(T)", {}};
    LineChart scaled{"R(T)/sqrt(T) vs T (Environment " + env + ")", "T", "R(T) / sqrt(T)", {}};
    for (const auto& c : result.curves) {
        Series a{c.algorithm + " n=" + std::to_string(c.n), {}, {}};
        Series b = a;
        for (std::size_t t = stride; t <= T; t += stride) {
            a.x.push_back(static_cast<double>(t));
            a.y.push_back(c.mean[t]);
            b.x.push_back(static_cast<double>(t));
            b.y.push_back(c.mean_over_sqrt(t));
        }
        regret.series.push_back(std::move(a));
        scaled.series.push_back(std::move(b));
    }
    LineChart by_n{"Regret at T = " + std::to_string(T) + " vs n (Environment " + env + ")", "number of arms n",
                   "R(T)", {}};
    for (const auto& alg : cfg.algorithms) {
        Series s{alg, {}, {}};
        std::vector<std::pair<int, double>> pts;
        for (const auto& c : result.curves)
            if (c.algorithm == alg)
                pts.emplace_back(c.n, c.mean[T]);
        std::sort(pts.begin(), pts.end());
        for (const auto& [n, v] : pts) {
            s.x.push_back(n);
            s.y.push_back(v);
        }
        by_n.series.push_back(std::move(s));
    }
    write_text_file(outdir / "regret_vs_t.svg", render_svg(regret));
    write_text_file(outdir / "regret_over_sqrt_t.svg", render_svg(scaled));
    write_text_file(outdir / "regret_vs_n.svg", render_svg(by_n));

    Json trends = Json::array();
    for (const auto& t : result.trends)
        trends.push_back({{"n", t.n},
                          {"algorithm", t.algorithm},
                          {"loglog_slope", std::isfinite(t.slope) ? Json(t.slope) : Json(nullptr)},
                          {"sqrt_ratio", std::isfinite(t.ratio) ? Json(t.ratio) : Json(nullptr)},
                          {"slope_ok", t.slope_ok},
                          {"ratio_ok", t.ratio_ok}});

    Json grid = Json::array();
    for (const auto& g : result.qwi_grid)
        grid.push_back(g);
    if (!result.qwi_grid.empty()) {
        std::string csv = "n,step_fast,step_slow,regret_T\n";
        for (const auto& g : result.qwi_grid)
            csv += fmt("%g", g.at("n")) + "," + fmt("%g", g.at("step_fast")) + "," + fmt("%g", g.at("step_slow")) +
                   "," + fmt("%.12g", g.at("regret_T")) + "\n";
        write_text_file(outdir / "qwi_grid.csv", csv);
    }

    if (cfg.write_traces) {
        fs::create_directories(outdir / "traces", ec);
        if (ec)
            throw IoError("cannot create " + (outdir / "traces").string() + ": " + ec.message());
        for (const auto& p : result.paths) {
            const std::string stem = "n" + std::to_string(p.n) + "_path" + std::to_string(p.path) + "_";
            for (const auto& [alg, csv] : p.trace_csv)
                write_text_file(outdir / "traces" / (stem + alg + ".csv"), csv);
            for (const auto& [alg, js] : p.episodes_json)
                write_text_file(outdir / "traces" / (stem + alg + "_episodes.json"), js);
        }
    }

    Json meta = result.metadata;
    meta["schema_version"] = kSchemaVersion;
    meta["config"] = cfg.to_json();
    meta["config"].erase("output_dir");
    meta["instance_mode"] = to_string(cfg.instance_mode);
    meta["regret_estimator"] = cfg.regret_estimator == RegretEstimator::Paired
                                   ? "cum_oracle(t) - cum_alg(t), oracle on the same environment stream and initial state"
                                   : "t * baseline_gain - cum_alg(t)";
    meta["baseline"] = {{"method", to_string(cfg.baseline_method)},
                        {"horizon", cfg.rollout_horizon},
                        {"reps", cfg.rollout_reps},
                        {"burn_in", cfg.rollout_horizon / 10}};
    meta["initial_state"] = cfg.initial_state == InitialState::Stationary
                                ? "index policy of the true model after " + std::to_string(cfg.initial_burn_in) +
                                      " burn-in steps from all zeros"
                                : std::string("all arms in state 0");
    Json initial = Json::array();
    for (const auto& p : result.paths)
        initial.push_back({{"n", p.n}, {"path", p.path}, {"state", p.initial.states}});
    meta["initial_states"] = initial;
    meta["trend_checks"] = trends;
    meta["trends_ok"] = result.trends_ok();
    meta["qwi_grid"] = grid;
    write_text_file(outdir / "run_metadata.json", dump_json(meta));

    Json summary_json;
    summary_json["schema_version"] = kSchemaVersion;
    summary_json["environment"] = env;
    summary_json["instance_mode"] = to_string(cfg.instance_mode);
    summary_json["summary"] = rows;
    summary_json["trend_checks"] = trends;
    summary_json["trends_ok"] = result.trends_ok();
    summary_json["fits"] = fits;
    summary_json["episodes"] = result.metadata.value("episodes", Json::array());
    return summary_json;
}

}  // namespace rblab
