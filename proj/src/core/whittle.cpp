#include "whittle.hpp"

#include "mdp_eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace rblab {

namespace {

// (J + bias)(s) for reward and for activity under the policy "passive on X".
struct PolicyValues {
    Vector reward;
    Vector activity;
};

std::string set_string(const std::vector<bool>& passive)
{
    std::string s = "{";
    bool first = true;
    for (std::size_t i = 0; i < passive.size(); ++i)
        if (passive[i]) {
            s += (first ? "" : ",") + std::to_string(i);
            first = false;
        }
    return s + "}";
}

PolicyValues evaluate_passive_set(const Arm& arm, const std::vector<bool>& passive, int reference_state)
{
    const int S = arm.num_states();
    ArmPolicy policy(S);
    for (int s = 0; s < S; ++s)
        policy[s] = passive[s] ? 0 : 1;
    Matrix rewards(S, 2);
    rewards.col(0) = policy_reward(arm, policy);
    rewards.col(1) = policy_activity(policy);
    try {
        const auto res = evaluate_chain_multi(policy_matrix(arm, policy), rewards, reference_state);
        return {res[0].bias.array() + res[0].gain, res[1].bias.array() + res[1].gain};
    } catch (const NumericalError& e) {
        throw NumericalError(std::string(e.what()) + " (passive set " + set_string(passive) + ")");
    }
}

}  // namespace

Vector whittle_indices(const Arm& arm, const WhittleOptions& options, WhittleTrace* trace)
{
    const int S = arm.num_states();
    if (S < 1)
        throw ValidationError("whittle_indices: empty arm");
    require_stochastic(arm.p_passive, "p_passive");
    require_stochastic(arm.p_active, "p_active");

    Vector w = Vector::Constant(S, std::numeric_limits<double>::quiet_NaN());
    std::vector<bool> passive(S, false);
    PolicyValues current = evaluate_passive_set(arm, passive, options.reference_state);
    int assigned = 0;

    std::vector<double> candidate(S);
    std::vector<PolicyValues> extended(S);
    while (assigned < S) {
        double best = std::numeric_limits<double>::infinity();
        for (int y = 0; y < S; ++y) {
            candidate[y] = std::numeric_limits<double>::infinity();
            if (passive[y])
                continue;
            std::vector<bool> with_y = passive;
            with_y[y] = true;
            extended[y] = evaluate_passive_set(arm, with_y, options.reference_state);
            const Vector d_reward = current.reward - extended[y].reward;
            const Vector d_activity = current.activity - extended[y].activity;
            for (int s = 0; s < S; ++s)
                if (std::abs(d_activity(s)) > options.activity_tolerance)
                    candidate[y] = std::min(candidate[y], d_reward(s) / d_activity(s));
            best = std::min(best, candidate[y]);
        }
        if (!std::isfinite(best))
            throw NumericalError("whittle_indices: degenerate arm, no remaining state changes activity (passive set " +
                                 set_string(passive) + ")");

        std::vector<int> batch;
        for (int y = 0; y < S; ++y)
            if (!passive[y] && candidate[y] <= best + options.tie_tolerance)
                batch.push_back(y);
        for (int y : batch) {
            w(y) = best;
            passive[y] = true;
        }
        assigned += static_cast<int>(batch.size());
        if (trace) {
            trace->thresholds.push_back(best);
            trace->batches.push_back(batch);
        }
        if (assigned < S)
            current = batch.size() == 1 ? extended[batch.front()]
                                        : evaluate_passive_set(arm, passive, options.reference_state);
    }
    return w;
}

WhittleTable whittle_table(const BanditInstance& instance, const WhittleOptions& options)
{
    WhittleTable table;
    table.indices.reserve(instance.arms.size());
    for (const auto& arm : instance.arms)
        table.indices.push_back(whittle_indices(arm, options));
    return table;
}

std::pair<double, double> default_bracket(const Arm& arm, double r_max)
{
    if (r_max < 0.0)
        r_max = arm.max_reward();
    return {-r_max - 1.0, 2.0 * r_max + 1.0};
}

namespace {

bool passive_at(const Arm& arm, int state, double charge, const BisectionOptions& options)
{
    const auto sol = solve_charged_arm(arm, charge, options.rvi_tolerance);
    return sol.q_passive(state) >= sol.q_active(state) - options.tie_tolerance;
}

}  // namespace

double whittle_bisection_oracle(const Arm& arm, int state, double lo, double hi, const BisectionOptions& options)
{
    if (state < 0 || state >= arm.num_states())
        throw ValidationError("whittle_bisection_oracle: state out of range");
    if (!(lo <= hi))
        throw ValidationError("whittle_bisection_oracle: empty bracket");
    if (lo == hi)
        return lo;
    if (passive_at(arm, state, lo, options) || !passive_at(arm, state, hi, options))
        throw NumericalError("bracket does not straddle index of state " + std::to_string(state) + " over [" +
                             std::to_string(lo) + ", " + std::to_string(hi) + "]");
    for (int it = 0; it < options.iterations && hi - lo > 0.0; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi)
            break;
        if (passive_at(arm, state, mid, options))
            hi = mid;
        else
            lo = mid;
    }
    return 0.5 * (lo + hi);
}

std::vector<bool> passive_set(const Arm& arm, double charge, const BisectionOptions& options)
{
    const auto sol = solve_charged_arm(arm, charge, options.rvi_tolerance);
    std::vector<bool> out(arm.num_states());
    for (int s = 0; s < arm.num_states(); ++s)
        out[s] = sol.q_passive(s) >= sol.q_active(s) - options.tie_tolerance;
    return out;
}

IndexabilityReport indexability_check(const Arm& arm, const std::vector<double>& grid, const BisectionOptions& options)
{
    IndexabilityReport report;
    if (grid.empty())
        return report;
    if (!std::is_sorted(grid.begin(), grid.end()))
        throw ValidationError("indexability_check: grid must be sorted");
    auto prev = passive_set(arm, grid.front(), options);
    for (std::size_t j = 1; j < grid.size(); ++j) {
        auto next = passive_set(arm, grid[j], options);
        for (int s = 0; s < arm.num_states(); ++s)
            if (prev[s] && !next[s]) {
                report.indexable = false;
                report.lambda_before = grid[j - 1];
                report.lambda_after = grid[j];
                report.state = s;
                return report;
            }
        prev = std::move(next);
    }
    return report;
}

std::vector<double> uniform_grid(double lo, double hi, int points)
{
    std::vector<double> g;
    if (points <= 0)
        return g;
    if (points == 1)
        return {lo};
    g.reserve(points);
    for (int k = 0; k < points; ++k)
        g.push_back(lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(points - 1));
    return g;
}

std::vector<int> top_m_actions(const std::vector<double>& priority, int m)
{
    const int n = static_cast<int>(priority.size());
    m = std::clamp(m, 0, n);
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::partial_sort(order.begin(), order.begin() + m, order.end(), [&](int a, int b) {
        return priority[a] > priority[b] || (priority[a] == priority[b] && a < b);
    });
    std::vector<int> actions(n, 0);
    for (int k = 0; k < m; ++k)
        actions[order[k]] = 1;
    return actions;
}

std::vector<int> select_actions(const WhittleTable& tables, const JointState& state, int m)
{
    const auto n = state.states.size();
    std::vector<double> priority(n);
    for (std::size_t i = 0; i < n; ++i)
        priority[i] = tables.index(static_cast<int>(i), state.states[i]);
    return top_m_actions(priority, m);
}

}  // namespace rblab
