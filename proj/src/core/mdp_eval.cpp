#include "mdp_eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace rblab {

namespace {

constexpr double kSingularRcond = 1e-13;
// Aperiodicity transform P -> tau I + (1 - tau) P for value iteration.
constexpr double kSelfLoop = 0.5;

std::string policy_string(const std::vector<int>& policy)
{
    std::string s = "[";
    for (std::size_t i = 0; i < policy.size(); ++i)
        s += (i ? "," : "") + std::to_string(policy[i]);
    return s + "]";
}

double span(const Vector& v) { return v.size() ? v.maxCoeff() - v.minCoeff() : 0.0; }

}  // namespace

std::vector<EvalResult> evaluate_chain_multi(const Matrix& p, const Matrix& rewards, int reference_state)
{
    const auto S = p.rows();
    if (p.cols() != S || rewards.rows() != S)
        throw ValidationError("evaluate_chain: dimension mismatch");
    if (reference_state < 0 || reference_state >= S)
        throw ValidationError("evaluate_chain: reference state out of range");

    // Unknowns: gain in slot `reference_state`, bias(y) elsewhere.
    Matrix a = -p;
    a.diagonal().array() += 1.0;
    a.col(reference_state).setOnes();
    Eigen::PartialPivLU<Matrix> lu(a);
    if (!(lu.rcond() >= kSingularRcond))
        throw NumericalError("multichain or degenerate policy: singular evaluation system");

    const Matrix x = lu.solve(rewards);
    std::vector<EvalResult> out(rewards.cols());
    for (Eigen::Index k = 0; k < rewards.cols(); ++k) {
        auto& res = out[k];
        res.gain = x(reference_state, k);
        res.bias = x.col(k);
        res.bias(reference_state) = 0.0;
        const Vector lhs = Vector::Constant(S, res.gain) + res.bias;
        const Vector rhs = rewards.col(k) + p * res.bias;
        res.bellman_residual = (lhs - rhs).cwiseAbs().maxCoeff();
    }
    return out;
}

EvalResult evaluate_chain(const Matrix& p, const Vector& r, int reference_state)
{
    return evaluate_chain_multi(p, r, reference_state).front();
}

Matrix policy_matrix(const Arm& arm, const ArmPolicy& policy)
{
    const int S = arm.num_states();
    if (static_cast<int>(policy.size()) != S)
        throw ValidationError("policy length differs from the arm's state count");
    Matrix p(S, S);
    for (int s = 0; s < S; ++s) {
        if (policy[s] != 0 && policy[s] != 1)
            throw ValidationError("policy entries must be 0 or 1");
        p.row(s) = arm.transitions(policy[s]).row(s);
    }
    return p;
}

Vector policy_reward(const Arm& arm, const ArmPolicy& policy)
{
    Vector r(arm.num_states());
    for (int s = 0; s < arm.num_states(); ++s)
        r(s) = arm.reward(s, policy[s]);
    return r;
}

Vector policy_activity(const ArmPolicy& policy)
{
    Vector r(policy.size());
    for (std::size_t s = 0; s < policy.size(); ++s)
        r(s) = policy[s];
    return r;
}

EvalResult evaluate_reward(const Arm& arm, const ArmPolicy& policy, int reference_state)
{
    try {
        return evaluate_chain(policy_matrix(arm, policy), policy_reward(arm, policy), reference_state);
    } catch (const NumericalError& e) {
        throw NumericalError(std::string(e.what()) + " (policy " + policy_string(policy) + ")");
    }
}

EvalResult evaluate_activity(const Arm& arm, const ArmPolicy& policy, int reference_state)
{
    try {
        return evaluate_chain(policy_matrix(arm, policy), policy_activity(policy), reference_state);
    } catch (const NumericalError& e) {
        throw NumericalError(std::string(e.what()) + " (policy " + policy_string(policy) + ")");
    }
}

Vector stationary_distribution(const Matrix& p)
{
    require_stochastic(p, "stationary_distribution input");
    const auto S = p.rows();
    // (I - P)^T xi = 0 with the first equation replaced by sum(xi) = 1.
    Matrix a = -p.transpose();
    a.diagonal().array() += 1.0;
    a.row(0).setOnes();
    Vector b = Vector::Zero(S);
    b(0) = 1.0;
    Eigen::PartialPivLU<Matrix> lu(a);
    if (!(lu.rcond() >= kSingularRcond))
        throw NumericalError("stationary_distribution: chain has more than one closed class");
    Vector xi = lu.solve(b);
    for (Eigen::Index i = 0; i < S; ++i) {
        if (xi(i) < -1e-12)
            throw NumericalError("stationary_distribution: negative mass, chain is not unichain");
        xi(i) = std::max(xi(i), 0.0);
    }
    xi /= xi.sum();
    return xi;
}

ChargedSolution solve_charged_arm(const Arm& arm, double charge, double span_tolerance, int max_sweeps)
{
    const int S = arm.num_states();
    const Vector r0 = arm.r_passive;
    const Vector r1 = arm.r_active.array() - charge;
    const Matrix& p0 = arm.p_passive;
    const Matrix& p1 = arm.p_active;

    Vector h = Vector::Zero(S);
    Vector th(S);
    ChargedSolution sol;
    double gap = std::numeric_limits<double>::infinity();
    for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
        const Vector v0 = r0 + kSelfLoop * h + (1.0 - kSelfLoop) * (p0 * h);
        const Vector v1 = r1 + kSelfLoop * h + (1.0 - kSelfLoop) * (p1 * h);
        th = v0.cwiseMax(v1);
        const Vector diff = th - h;
        gap = span(diff);
        sol.gain = 0.5 * (diff.maxCoeff() + diff.minCoeff());
        h = th.array() - th(0);
        sol.sweeps = sweep;
        if (gap < span_tolerance)
            break;
    }
    if (!(gap < span_tolerance))
        throw NumericalError("relative value iteration did not converge (span " + std::to_string(gap) + ")");
    sol.bias = (1.0 - kSelfLoop) * h;
    sol.q_passive = r0 + p0 * sol.bias;
    sol.q_active = r1 + p1 * sol.bias;
    return sol;
}

// ---------------------------------------------------------------------------

JointSpace::JointSpace(const BanditInstance& instance)
{
    const int n = instance.num_arms();
    dims_.resize(n);
    strides_.resize(n);
    for (int i = n - 1; i >= 0; --i) {
        dims_[i] = instance.arms[i].num_states();
        strides_[i] = size_;
        size_ *= static_cast<std::size_t>(dims_[i]);
    }
}

std::size_t JointSpace::index(const std::vector<int>& states) const
{
    std::size_t idx = 0;
    for (std::size_t i = 0; i < dims_.size(); ++i)
        idx += strides_[i] * static_cast<std::size_t>(states[i]);
    return idx;
}

void JointSpace::decode(std::size_t index, std::vector<int>& states) const
{
    states.resize(dims_.size());
    for (std::size_t i = 0; i < dims_.size(); ++i) {
        states[i] = static_cast<int>(index / strides_[i]);
        index %= strides_[i];
    }
}

void JointSpace::apply(const BanditInstance& instance, const std::vector<int>& actions, const Vector& h,
                       Vector& out) const
{
    Vector cur = h;
    Vector next(static_cast<Eigen::Index>(size_));
    for (std::size_t i = 0; i < dims_.size(); ++i) {
        const Matrix& p = instance.arms[i].transitions(actions[i]);
        const std::size_t d = dims_[i];
        const std::size_t inner = strides_[i];
        const std::size_t outer = size_ / (d * inner);
        for (std::size_t o = 0; o < outer; ++o) {
            const std::size_t base = o * d * inner;
            for (std::size_t s = 0; s < d; ++s)
                for (std::size_t in = 0; in < inner; ++in) {
                    double acc = 0.0;
                    for (std::size_t z = 0; z < d; ++z)
                        acc += p(s, z) * cur(base + z * inner + in);
                    next(base + s * inner + in) = acc;
                }
        }
        cur.swap(next);
    }
    out = std::move(cur);
}

double joint_reward(const BanditInstance& instance, const std::vector<int>& states, const std::vector<int>& actions)
{
    double r = 0.0;
    for (int i = 0; i < instance.num_arms(); ++i)
        r += instance.arms[i].reward(states[i], actions[i]);
    return r;
}

std::vector<std::vector<int>> feasible_actions(int n, int m)
{
    std::vector<std::vector<int>> out;
    if (m < 0 || m > n)
        return out;
    std::vector<int> a(n, 0);
    std::fill(a.begin(), a.begin() + m, 1);
    do {
        out.push_back(a);
    } while (std::prev_permutation(a.begin(), a.end()));
    return out;
}

double joint_policy_gain(const BanditInstance& instance, const JointPolicy& policy)
{
    const JointSpace space(instance);
    const std::size_t N = space.size();
    if (N > kJointGainStateLimit)
        throw GuardrailError("joint_policy_gain: " + std::to_string(N) +
                             " joint states exceed the exact-oracle limit; use a long-rollout estimate instead");

    const int n = instance.num_arms();
    std::vector<std::vector<int>> actions(N);
    Vector reward(static_cast<Eigen::Index>(N));
    JointState js;
    for (std::size_t idx = 0; idx < N; ++idx) {
        space.decode(idx, js.states);
        actions[idx] = policy(js);
        if (static_cast<int>(actions[idx].size()) != n)
            throw ValidationError("joint policy returned an action vector of wrong length");
        reward(idx) = joint_reward(instance, js.states, actions[idx]);
    }

    if (N <= 2000) {
        Matrix p(N, N);
        for (std::size_t idx = 0; idx < N; ++idx) {
            space.decode(idx, js.states);
            Vector row = Vector::Ones(1);
            for (int i = 0; i < n; ++i) {
                const Matrix& pi = instance.arms[i].transitions(actions[idx][i]);
                const auto d = pi.cols();
                Vector grown(row.size() * d);
                for (Eigen::Index k = 0; k < row.size(); ++k)
                    grown.segment(k * d, d) = row(k) * pi.row(js.states[i]).transpose();
                row.swap(grown);
            }
            p.row(idx) = row.transpose();
        }
        return evaluate_chain(p, reward).gain;
    }

    // Larger spaces: relative value iteration for the fixed policy, applying
    // each distinct action vector through the product structure.
    std::vector<std::vector<int>> distinct = actions;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    std::vector<int> group(N);
    for (std::size_t idx = 0; idx < N; ++idx)
        group[idx] = static_cast<int>(std::lower_bound(distinct.begin(), distinct.end(), actions[idx]) - distinct.begin());

    Vector h = Vector::Zero(static_cast<Eigen::Index>(N));
    Vector ph(static_cast<Eigen::Index>(N)), applied;
    double gain = 0.0;
    for (int sweep = 0; sweep < 1000000; ++sweep) {
        for (std::size_t g = 0; g < distinct.size(); ++g) {
            space.apply(instance, distinct[g], h, applied);
            for (std::size_t idx = 0; idx < N; ++idx)
                if (group[idx] == static_cast<int>(g))
                    ph(idx) = applied(idx);
        }
        const Vector th = reward + kSelfLoop * h + (1.0 - kSelfLoop) * ph;
        const Vector diff = th - h;
        gain = 0.5 * (diff.maxCoeff() + diff.minCoeff());
        h = th.array() - th(0);
        if (span(diff) < 1e-10)
            return gain;
    }
    throw NumericalError("joint_policy_gain: value iteration did not converge");
}

double joint_policy_gain(const BanditInstance& instance, const WhittleTable& tables)
{
    const int m = instance.budget;
    return joint_policy_gain(instance, [&](const JointState& s) { return select_actions(tables, s, m); });
}

JointOptimum joint_optimal_gain(const BanditInstance& instance, double span_tolerance, int max_sweeps)
{
    const JointSpace space(instance);
    const auto actions = feasible_actions(instance.num_arms(), instance.budget);
    const std::size_t N = space.size();
    if (N * actions.size() > kJointOptimalLimit)
        throw GuardrailError("joint_optimal_gain: " + std::to_string(N) + " states x " +
                             std::to_string(actions.size()) + " actions exceed the exact-oracle limit");

    const auto A = static_cast<Eigen::Index>(actions.size());
    Matrix reward(static_cast<Eigen::Index>(N), A);
    std::vector<int> states;
    for (std::size_t idx = 0; idx < N; ++idx) {
        space.decode(idx, states);
        for (Eigen::Index a = 0; a < A; ++a)
            reward(idx, a) = joint_reward(instance, states, actions[a]);
    }

    JointOptimum result;
    Vector h = Vector::Zero(static_cast<Eigen::Index>(N));
    Vector applied;
    Vector th(static_cast<Eigen::Index>(N));
    double gap = std::numeric_limits<double>::infinity();
    for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
        th.setConstant(-std::numeric_limits<double>::infinity());
        for (Eigen::Index a = 0; a < A; ++a) {
            space.apply(instance, actions[a], h, applied);
            th = th.cwiseMax(reward.col(a) + kSelfLoop * h + (1.0 - kSelfLoop) * applied);
        }
        const Vector diff = th - h;
        gap = span(diff);
        result.gain = 0.5 * (diff.maxCoeff() + diff.minCoeff());
        h = th.array() - th(0);
        result.sweeps = sweep;
        if (gap < span_tolerance)
            break;
    }
    result.final_span = gap;
    if (!(gap < span_tolerance))
        throw NumericalError("joint_optimal_gain: no convergence after " + std::to_string(max_sweeps) +
                             " sweeps (span " + std::to_string(gap) + ")");

    // Greedy policy with respect to the untransformed bias.
    const Vector bias = (1.0 - kSelfLoop) * h;
    Matrix q(static_cast<Eigen::Index>(N), A);
    for (Eigen::Index a = 0; a < A; ++a) {
        space.apply(instance, actions[a], bias, applied);
        q.col(a) = reward.col(a) + applied;
    }
    result.policy.resize(N);
    for (std::size_t idx = 0; idx < N; ++idx) {
        Eigen::Index best = 0;
        for (Eigen::Index a = 1; a < A; ++a)
            if (q(idx, a) > q(idx, best) + 1e-12)
                best = a;
        result.policy[idx] = actions[best];
    }
    return result;
}

}  // namespace rblab
