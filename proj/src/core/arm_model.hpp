#pragma once

#include "errors.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <string>
#include <vector>

namespace rblab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Absolute tolerance on each row sum of a transition matrix.
inline constexpr double kStochasticTolerance = 1e-12;

enum class RewardModel { A, B };

const char* to_string(RewardModel m);
RewardModel reward_model_from_string(const std::string& s);

/// One controlled two-action Markov chain. Action 0 is passive, 1 is active.
struct Arm {
    Matrix p_passive;
    Matrix p_active;
    Vector r_passive;
    Vector r_active;

    int num_states() const { return static_cast<int>(r_passive.size()); }
    const Matrix& transitions(int action) const { return action == 0 ? p_passive : p_active; }
    double reward(int state, int action) const
    {
        return action == 0 ? r_passive(state) : r_active(state);
    }
    double max_reward() const;
};

struct BanditInstance {
    std::vector<Arm> arms;
    int budget = 1;
    RewardModel reward_model = RewardModel::A;
    /// Upper bound on per-arm rewards; negative means "use max reward entry".
    double r_max = -1.0;

    int num_arms() const { return static_cast<int>(arms.size()); }
    double reward_bound() const;
    int total_states() const;
};

struct JointState {
    std::vector<int> states;
};

/// Returns human-readable descriptions of every invariant violation. Empty
/// means the instance is valid.
std::vector<std::string> validate(const BanditInstance& instance);
std::vector<std::string> validate_arm(const Arm& arm, double r_max, int arm_index = 0);

/// Row-stochasticity defects of a square matrix ("row r: sum deficit ...").
std::vector<std::string> stochastic_defects(const Matrix& p);
void require_stochastic(const Matrix& p, const char* what);

bool joint_state_valid(const BanditInstance& instance, const JointState& state);

/// 1 - min over row pairs of the overlap sum_z min(P(z|s), P(z|s')).
double ergodicity_coefficient(const Matrix& p);

/// Same quantity taken over all 2S (state, action) rows of the arm.
double arm_contraction_factor(const Arm& arm);

/// prod_i (1 - arm_contraction_factor(arm_i)); a lower bound on the joint
/// chain's one-step overlap (1 - joint contraction factor).
double joint_minorization_lower_bound(const BanditInstance& instance);

}  // namespace rblab
