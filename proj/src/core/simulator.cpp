#include "simulator.hpp"

#include <cstdio>

namespace rblab {

SimulatedEnvironment::SimulatedEnvironment(const BanditInstance& instance, std::uint64_t seed, JointState initial)
    : instance_(instance), initial_(std::move(initial)), rng_(make_rng(seed))
{
    auto problems = validate(instance_);
    if (!problems.empty())
        throw ValidationError("environment instance invalid: " + problems.front());
    if (initial_.states.empty())
        initial_.states.assign(instance_.num_arms(), 0);
    if (!joint_state_valid(instance_, initial_))
        throw ValidationError("environment: initial state out of range");
    for (const auto& arm : instance_.arms) {
        std::array<Matrix, 2> cum;
        for (int a = 0; a < 2; ++a) {
            cum[a] = arm.transitions(a);
            for (Eigen::Index r = 0; r < cum[a].rows(); ++r)
                for (Eigen::Index c = 1; c < cum[a].cols(); ++c)
                    cum[a](r, c) += cum[a](r, c - 1);
        }
        cumulative_.push_back(std::move(cum));
    }
    state_ = initial_;
}

JointState SimulatedEnvironment::reset()
{
    state_ = initial_;
    return state_;
}

int SimulatedEnvironment::sample_next(int arm, int action, int state)
{
    const Matrix& cum = cumulative_[arm][action];
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng_);
    const auto S = cum.cols();
    for (Eigen::Index z = 0; z < S; ++z)
        if (u < cum(state, z))
            return static_cast<int>(z);
    // u landed in the rounding gap above the last partial sum.
    const Matrix& p = instance_.arms[arm].transitions(action);
    for (Eigen::Index z = S - 1; z >= 0; --z)
        if (p(state, z) > 0.0)
            return static_cast<int>(z);
    return static_cast<int>(S - 1);
}

StepResult SimulatedEnvironment::step(const std::vector<int>& actions)
{
    const int n = num_arms();
    if (static_cast<int>(actions.size()) != n)
        throw ValidationError("step: action vector has wrong length");
    int active = 0;
    for (int a : actions) {
        if (a != 0 && a != 1)
            throw ValidationError("step: actions must be 0 or 1");
        active += a;
    }
    if (active != instance_.budget)
        throw ValidationError("step: exactly m arms must be active");

    StepResult out;
    out.next_states.resize(n);
    out.arm_rewards.resize(n);
    for (int i = 0; i < n; ++i) {
        const int s = state_.states[i];
        out.arm_rewards[i] = instance_.arms[i].reward(s, actions[i]);
        out.reward += out.arm_rewards[i];
        out.next_states[i] = sample_next(i, actions[i], s);
    }
    state_.states = out.next_states;
    return out;
}

LearnerSpec LearnerSpec::from_instance(const BanditInstance& instance)
{
    LearnerSpec spec;
    spec.budget = instance.budget;
    spec.reward_model = instance.reward_model;
    spec.r_max = instance.reward_bound();
    for (const auto& arm : instance.arms) {
        spec.num_states.push_back(arm.num_states());
        spec.r_passive.push_back(arm.r_passive);
        spec.r_active.push_back(arm.r_active);
    }
    return spec;
}

Arm LearnerSpec::make_arm(int i, const Matrix& p_passive, const Matrix& p_active) const
{
    return Arm{p_passive, p_active, r_passive[i], r_active[i]};
}

const char* to_string(EpisodeTrigger trigger)
{
    switch (trigger) {
    case EpisodeTrigger::LengthRule:
        return "length_rule";
    case EpisodeTrigger::DoublingRule:
        return "doubling_rule";
    case EpisodeTrigger::HorizonEnd:
        return "horizon_end";
    }
    return "unknown";
}

RunTrace run_index_policy(Environment& env, const WhittleTable& table, std::int64_t T)
{
    RunTrace trace;
    trace.algorithm = "whittle-oracle";
    const int n = env.num_arms();
    trace.num_arms = n;
    JointState state = env.reset();
    double cumulative = 0.0;
    for (std::int64_t t = 1; t <= T; ++t) {
        const auto actions = select_actions(table, state, env.budget());
        const auto res = env.step(actions);
        trace.states.insert(trace.states.end(), state.states.begin(), state.states.end());
        trace.actions.insert(trace.actions.end(), actions.begin(), actions.end());
        cumulative += res.reward;
        trace.rewards.push_back(res.reward);
        trace.cumulative_reward.push_back(cumulative);
        trace.episode.push_back(0);
        state.states = res.next_states;
    }
    return trace;
}

std::string trace_csv(const RunTrace& trace)
{
    std::string out = "algorithm,t,episode,reward,cumulative_reward\n";
    char buf[160];
    for (std::size_t k = 0; k < trace.rewards.size(); ++k) {
        std::snprintf(buf, sizeof(buf), ",%zu,%d,%.17g,%.17g\n", k + 1, trace.episode[k], trace.rewards[k],
                      trace.cumulative_reward[k]);
        out += trace.algorithm;
        out += buf;
    }
    return out;
}

Json episodes_json(const RunTrace& trace)
{
    Json arr = Json::array();
    for (const auto& e : trace.episodes) {
        Json j;
        j["k"] = e.k;
        j["t_k"] = e.start;
        j["T_k"] = e.length;
        j["trigger"] = to_string(e.trigger);
        j["sampled_model_seed"] = e.sample_seed;
        j["resamples"] = e.resamples;
        arr.push_back(std::move(j));
    }
    Json out;
    out["schema_version"] = kSchemaVersion;
    out["algorithm"] = trace.algorithm;
    out["episodes"] = std::move(arr);
    return out;
}

}  // namespace rblab
