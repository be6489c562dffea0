#pragma once

#include "arm_model.hpp"
#include "model_io.hpp"
#include "rng.hpp"
#include "whittle.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace rblab {

struct StepResult {
    std::vector<int> next_states;
    std::vector<double> arm_rewards;  ///< r^i(s^i, a^i) per arm
    double reward = 0.0;              ///< aggregated per-step reward
};

/// What a learner may touch: the current joint state and step outcomes.
/// True dynamics stay behind this interface.
class Environment {
public:
    virtual ~Environment() = default;
    virtual int num_arms() const = 0;
    virtual int num_states(int arm) const = 0;
    virtual int budget() const = 0;
    virtual JointState reset() = 0;
    virtual StepResult step(const std::vector<int>& actions) = 0;
};

/// Samples the true instance's dynamics with its own random stream.
class SimulatedEnvironment final : public Environment {
public:
    SimulatedEnvironment(const BanditInstance& instance, std::uint64_t seed, JointState initial = {});

    int num_arms() const override { return instance_.num_arms(); }
    int num_states(int arm) const override { return instance_.arms[arm].num_states(); }
    int budget() const override { return instance_.budget; }
    JointState reset() override;
    StepResult step(const std::vector<int>& actions) override;

    const JointState& state() const { return state_; }

private:
    int sample_next(int arm, int action, int state);

    BanditInstance instance_;
    std::vector<std::array<Matrix, 2>> cumulative_;
    JointState initial_;
    JointState state_;
    Rng rng_;
};

/// Known quantities handed to learners: shape, budget, rewards, reward bound.
struct LearnerSpec {
    std::vector<int> num_states;
    int budget = 1;
    RewardModel reward_model = RewardModel::A;
    double r_max = 0.0;
    std::vector<Vector> r_passive;
    std::vector<Vector> r_active;

    static LearnerSpec from_instance(const BanditInstance& instance);
    int num_arms() const { return static_cast<int>(num_states.size()); }
    /// Arm with the given dynamics and these rewards.
    Arm make_arm(int i, const Matrix& p_passive, const Matrix& p_active) const;
};

enum class EpisodeTrigger { LengthRule, DoublingRule, HorizonEnd };
const char* to_string(EpisodeTrigger trigger);

struct EpisodeRecord {
    int k = 0;
    std::int64_t start = 0;   ///< t_k (1-based time)
    std::int64_t length = 0;  ///< T_k
    EpisodeTrigger trigger = EpisodeTrigger::HorizonEnd;  ///< what ended it
    std::uint64_t sample_seed = 0;                        ///< replays theta_k
    int resamples = 0;
};

struct RunTrace {
    std::string algorithm;
    int num_arms = 0;
    std::vector<int> states;   ///< T x n, row t-1 holds S_t
    std::vector<int> actions;  ///< T x n
    std::vector<double> rewards;
    std::vector<double> cumulative_reward;
    std::vector<int> episode;  ///< episode index per step, 0 when not episodic
    std::vector<EpisodeRecord> episodes;

    std::int64_t horizon() const { return static_cast<std::int64_t>(rewards.size()); }
};

/// Plays the index policy of a fixed table (the oracle that knows the model).
RunTrace run_index_policy(Environment& env, const WhittleTable& table, std::int64_t T);

/// CSV with columns algorithm,t,episode,reward,cumulative_reward.
std::string trace_csv(const RunTrace& trace);
Json episodes_json(const RunTrace& trace);

}  // namespace rblab
