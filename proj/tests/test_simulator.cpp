#include "envgen.hpp"
#include "errors.hpp"
#include "simulator.hpp"
#include "test_util.hpp"
#include "whittle.hpp"

#include <doctest.h>

#include <cmath>

using namespace rblab;

namespace {

BanditInstance small_instance(RewardModel model)
{
    Rng rng = make_rng(61);
    BanditInstance inst;
    inst.arms = {testutil::random_arm(3, rng), testutil::random_arm(3, rng)};
    if (model == RewardModel::B)
        for (auto& a : inst.arms)
            a.r_passive.setZero();
    inst.reward_model = model;
    inst.budget = 1;
    inst.r_max = 1.0;
    return inst;
}

}  // namespace

TEST_CASE("transition frequencies match the true rows")
{
    const auto inst = small_instance(RewardModel::A);
    SimulatedEnvironment env(inst, 7);
    env.reset();
    Matrix counts = Matrix::Zero(3, 3);
    const int steps = 60000;
    for (int t = 0; t < steps; ++t) {
        const int s = env.state().states[0];
        const auto r = env.step({1, 0});
        counts(s, r.next_states[0]) += 1.0;
    }
    for (int s = 0; s < 3; ++s) {
        const double visits = counts.row(s).sum();
        REQUIRE(visits > 1000);
        for (int y = 0; y < 3; ++y) {
            const double p = inst.arms[0].p_active(s, y);
            CHECK(std::abs(counts(s, y) / visits - p) <= 5.0 * std::sqrt(p * (1 - p) / visits));
        }
    }
}

TEST_CASE("per-step reward follows the reward model")
{
    for (auto model : {RewardModel::A, RewardModel::B}) {
        const auto inst = small_instance(model);
        SimulatedEnvironment env(inst, 8, JointState{{2, 1}});
        env.reset();
        const auto r = env.step({0, 1});
        const double expected = inst.arms[0].r_passive(2) + inst.arms[1].r_active(1);
        CHECK(r.reward == doctest::Approx(expected));
        CHECK(r.arm_rewards[1] == inst.arms[1].r_active(1));
    }
}

TEST_CASE("budget and action checks")
{
    const auto inst = small_instance(RewardModel::A);
    SimulatedEnvironment env(inst, 9);
    env.reset();
    CHECK_THROWS_AS(env.step({1, 1}), ValidationError);
    CHECK_THROWS_AS(env.step({0, 0}), ValidationError);
    CHECK_THROWS_AS(env.step({2, 0}), ValidationError);
    CHECK_THROWS_AS(env.step({1}), ValidationError);
}

TEST_CASE("same seed, same trajectory")
{
    const auto inst = small_instance(RewardModel::A);
    const auto table = whittle_table(inst);
    SimulatedEnvironment a(inst, 10), b(inst, 10);
    const auto ta = run_index_policy(a, table, 500);
    const auto tb = run_index_policy(b, table, 500);
    CHECK(ta.states == tb.states);
    CHECK(ta.cumulative_reward == tb.cumulative_reward);
    SimulatedEnvironment c(inst, 11);
    CHECK(run_index_policy(c, table, 500).states != ta.states);
}

TEST_CASE("index policy trace is consistent")
{
    Rng rng = make_rng(62);
    const auto inst = make_environment(EnvironmentKind::A, 3, 5, rng);
    const auto table = whittle_table(inst);
    SimulatedEnvironment env(inst, 11);
    const auto tr = run_index_policy(env, table, 200);
    REQUIRE(tr.horizon() == 200);
    double cum = 0.0;
    for (std::int64_t t = 0; t < 200; ++t) {
        JointState st;
        st.states.assign(tr.states.begin() + t * 3, tr.states.begin() + (t + 1) * 3);
        const std::vector<int> acts(tr.actions.begin() + t * 3, tr.actions.begin() + (t + 1) * 3);
        CHECK(acts == select_actions(table, st, 1));
        cum += tr.rewards[t];
        CHECK(tr.cumulative_reward[t] == doctest::Approx(cum));
    }
    const auto csv = trace_csv(tr);
    CHECK(csv.rfind("algorithm,t,episode,reward,cumulative_reward\n", 0) == 0);
}

TEST_CASE("learner view hides dynamics")
{
    const auto inst = small_instance(RewardModel::A);
    const auto spec = LearnerSpec::from_instance(inst);
    CHECK(spec.num_states == std::vector<int>{3, 3});
    CHECK(spec.r_max == 1.0);
    const Matrix id = Matrix::Identity(3, 3);
    const Arm arm = spec.make_arm(1, id, id);
    CHECK(arm.r_active == inst.arms[1].r_active);
    CHECK(arm.p_passive == id);
}
