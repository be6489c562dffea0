#pragma once

#include "arm_model.hpp"
#include "whittle.hpp"

#include <functional>
#include <vector>

namespace rblab {

/// Deterministic stationary policy for one arm: actions[s] in {0, 1}.
using ArmPolicy = std::vector<int>;

struct EvalResult {
    double gain = 0.0;
    Vector bias;  ///< bias[reference_state] == 0
    double bellman_residual = 0.0;
};

/// Solves gain + bias(s) = r(s) + <P_s, bias> with bias(reference_state) = 0.
/// Throws NumericalError when the system is singular (multichain policy).
EvalResult evaluate_chain(const Matrix& p, const Vector& r, int reference_state = 0);

/// Simultaneous evaluation of several reward vectors under one chain; shares
/// a single factorization. Column k of `rewards` gives result k.
std::vector<EvalResult> evaluate_chain_multi(const Matrix& p, const Matrix& rewards, int reference_state = 0);

Matrix policy_matrix(const Arm& arm, const ArmPolicy& policy);
Vector policy_reward(const Arm& arm, const ArmPolicy& policy);
Vector policy_activity(const ArmPolicy& policy);

EvalResult evaluate_reward(const Arm& arm, const ArmPolicy& policy, int reference_state = 0);
EvalResult evaluate_activity(const Arm& arm, const ArmPolicy& policy, int reference_state = 0);

/// Probability row vector xi with xi P = xi. Throws NumericalError for chains
/// with more than one closed class.
Vector stationary_distribution(const Matrix& p);

/// Average-reward solution of the single-arm problem with per-step reward
/// r(s, a) - charge * a, by relative value iteration.
struct ChargedSolution {
    double gain = 0.0;
    Vector bias;        ///< satisfies the optimality equation, bias(0) = 0
    Vector q_passive;   ///< r(s,0) + <P0_s, bias>
    Vector q_active;    ///< r(s,1) - charge + <P1_s, bias>
    int sweeps = 0;
};
ChargedSolution solve_charged_arm(const Arm& arm, double charge, double span_tolerance = 1e-10,
                                  int max_sweeps = 1000000);

// ---------------------------------------------------------------------------
// Joint-chain oracles (tiny instances only).

/// Mixed-radix indexing of the joint state space; the last arm varies fastest.
class JointSpace {
public:
    explicit JointSpace(const BanditInstance& instance);

    std::size_t size() const { return size_; }
    int num_arms() const { return static_cast<int>(dims_.size()); }
    std::size_t index(const std::vector<int>& states) const;
    void decode(std::size_t index, std::vector<int>& states) const;

    /// out = P^{actions} h for one fixed joint action vector.
    void apply(const BanditInstance& instance, const std::vector<int>& actions, const Vector& h, Vector& out) const;

private:
    std::vector<int> dims_;
    std::vector<std::size_t> strides_;
    std::size_t size_ = 1;
};

double joint_reward(const BanditInstance& instance, const std::vector<int>& states, const std::vector<int>& actions);

/// All binary vectors of length n with exactly m ones, in descending lexicographic order.
std::vector<std::vector<int>> feasible_actions(int n, int m);

using JointPolicy = std::function<std::vector<int>(const JointState&)>;

inline constexpr std::size_t kJointGainStateLimit = 10000;
inline constexpr std::size_t kJointOptimalLimit = 100000;

/// Exact gain of an arbitrary stationary joint policy.
double joint_policy_gain(const BanditInstance& instance, const JointPolicy& policy);

/// Exact gain of the Whittle index policy defined by `tables`.
double joint_policy_gain(const BanditInstance& instance, const WhittleTable& tables);

struct JointOptimum {
    double gain = 0.0;
    std::vector<std::vector<int>> policy;  ///< action vector per joint state index
    double final_span = 0.0;
    int sweeps = 0;
};

/// Optimal average reward over feasible actions by relative value iteration.
JointOptimum joint_optimal_gain(const BanditInstance& instance, double span_tolerance = 1e-10,
                                int max_sweeps = 1000000);

}  // namespace rblab
