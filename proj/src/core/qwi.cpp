#include "qwi.hpp"

#include "rng.hpp"
#include "whittle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rblab {

QwiState QwiState::init(const LearnerSpec& spec, const QwiOptions& options)
{
    if (!(options.step_fast >= 0.0 && options.step_fast <= 1.0) || !(options.step_slow >= 0.0 && options.step_slow <= 1.0))
        throw ValidationError("qwi: step sizes must lie in [0, 1]");
    if (!(options.index_bound_factor >= 0.0))
        throw ValidationError("qwi: index bound factor must be non-negative");
    if (!(options.epsilon >= 0.0 && options.epsilon <= 1.0))
        throw ValidationError("qwi: exploration rate must lie in [0, 1]");
    QwiState st;
    st.options = options;
    for (int S : spec.num_states) {
        if (options.reference_state < 0 || options.reference_state >= S)
            throw ValidationError("qwi: reference state out of range");
        QwiArmState arm;
        arm.S = S;
        arm.q.assign(static_cast<std::size_t>(S) * S * 2, 0.0);
        arm.index.assign(S, options.initial_index);
        arm.index_bound = options.index_bound_factor * (spec.r_max + 1.0);
        st.arms.push_back(std::move(arm));
    }
    return st;
}

std::vector<double> QwiState::priorities(const JointState& state) const
{
    std::vector<double> p(arms.size());
    for (std::size_t i = 0; i < arms.size(); ++i)
        p[i] = arms[i].index[state.states[i]];
    return p;
}

void qwi_update(QwiArmState& arm, const QwiOptions& options, int state, int action, double reward, int next_state)
{
    const double a = options.step_fast;
    for (int anchor = 0; anchor < arm.S; ++anchor) {
        const double charged = reward - arm.index[anchor] * action;
        const double next_value = std::max(arm.at(anchor, next_state, 0), arm.at(anchor, next_state, 1));
        const double offset = arm.at(anchor, options.reference_state, 0);
        double& q = arm.at(anchor, state, action);
        q += a * (charged + next_value - offset - q);
    }
    double& lambda = arm.index[state];
    lambda += options.step_slow * (arm.at(state, state, 1) - arm.at(state, state, 0));
    if (arm.index_bound > 0.0)
        lambda = std::clamp(lambda, -arm.index_bound, arm.index_bound);
}

RunTrace run_qwi(Environment& env, const LearnerSpec& spec, std::int64_t T, std::uint64_t seed,
                 const QwiOptions& options, QwiState* final_state)
{
    const int n = env.num_arms();
    if (spec.num_arms() != n)
        throw ValidationError("run_qwi: environment and LearnerSpec disagree on n");
    QwiState st = QwiState::init(spec, options);
    Rng rng = make_rng(seed);
    const double limit = 1e6 * std::max(spec.r_max, 1.0);

    RunTrace trace;
    trace.algorithm = "qwi";
    trace.num_arms = n;
    JointState state = env.reset();
    double cumulative = 0.0;
    std::vector<int> order(n);
    for (std::int64_t t = 1; t <= T; ++t) {
        std::vector<int> actions;
        if (std::uniform_real_distribution<double>(0.0, 1.0)(rng) < options.epsilon) {
            std::iota(order.begin(), order.end(), 0);
            std::shuffle(order.begin(), order.end(), rng);
            actions.assign(n, 0);
            for (int k = 0; k < spec.budget; ++k)
                actions[order[k]] = 1;
        } else {
            actions = top_m_actions(st.priorities(state), spec.budget);
        }
        const auto res = env.step(actions);
        for (int i = 0; i < n; ++i) {
            qwi_update(st.arms[i], options, state.states[i], actions[i], res.arm_rewards[i], res.next_states[i]);
            for (double q : st.arms[i].q)
                if (!(std::abs(q) <= limit))
                    throw NumericalError("qwi: Q-values diverged at t = " + std::to_string(t) + " (arm " +
                                         std::to_string(i) + ")");
        }
        trace.states.insert(trace.states.end(), state.states.begin(), state.states.end());
        trace.actions.insert(trace.actions.end(), actions.begin(), actions.end());
        cumulative += res.reward;
        trace.rewards.push_back(res.reward);
        trace.cumulative_reward.push_back(cumulative);
        trace.episode.push_back(0);
        state.states = res.next_states;
    }
    if (final_state)
        *final_state = std::move(st);
    return trace;
}

}  // namespace rblab
