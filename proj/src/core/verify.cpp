#include "verify.hpp"

#include "bayes.hpp"
#include "envgen.hpp"
#include "errors.hpp"
#include "harness.hpp"
#include "mdp_eval.hpp"
#include "rng.hpp"
#include "whittle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rblab {
namespace {

constexpr std::uint64_t kWhittleStream = 11;
constexpr std::uint64_t kClosedFormStream = 12;
constexpr std::uint64_t kGainStream = 13;
constexpr std::uint64_t kGeneratorStream = 14;

double bisect_with_widening(const Arm& arm, int state, double r_max)
{
    auto [lo, hi] = default_bracket(arm, r_max);
    for (int attempt = 0;; ++attempt) {
        try {
            return whittle_bisection_oracle(arm, state, lo, hi);
        } catch (const NumericalError&) {
            if (attempt == 6)
                throw;
            const double w = hi - lo;
            lo -= 2.0 * w;
            hi += 2.0 * w;
        }
    }
}

Json check(const std::string& name, bool passed, Json details)
{
    Json j;
    j["name"] = name;
    j["passed"] = passed;
    j["details"] = std::move(details);
    return j;
}

Json whittle_suite(int instances, std::uint64_t seed)
{
    const int S = 5;
    const double d = 0.1;
    Rng rng = make_rng(derive_seed(seed, kWhittleStream));
    int skipped = 0, compared = 0, failures = 0;
    double max_error = 0.0;
    Json failing = Json::array();
    for (int k = 0; k < instances; ++k) {
        const Arm arm = make_reset_arm(EnvironmentKind::A, S, d, rng);
        const double r_max = static_cast<double>(S - 1) * (S - 1);
        const auto [lo, hi] = default_bracket(arm, r_max);
        if (!indexability_check(arm, uniform_grid(lo, hi, 201)).indexable) {
            ++skipped;
            continue;
        }
        ++compared;
        Vector greedy;
        try {
            greedy = whittle_indices(arm);
        } catch (const std::exception& e) {
            ++failures;
            failing.push_back({{"arm", k}, {"error", e.what()}});
            continue;
        }
        for (int s = 0; s < S; ++s) {
            const double oracle = bisect_with_widening(arm, s, r_max);
            const double err = std::abs(oracle - greedy(s));
            max_error = std::max(max_error, err);
            if (!(err <= 1e-6)) {
                ++failures;
                failing.push_back({{"arm", k}, {"state", s}, {"greedy", greedy(s)}, {"bisection", oracle}});
            }
        }
    }
    const double skip_fraction = instances > 0 ? static_cast<double>(skipped) / instances : 0.0;
    Json out = Json::array();
    out.push_back(check("whittle_vs_bisection", failures == 0,
                        {{"arms", instances},
                         {"compared", compared},
                         {"max_abs_error", max_error},
                         {"tolerance", 1e-6},
                         {"failures", failing}}));
    out.push_back(check("non_indexable_fraction", skip_fraction <= 0.05,
                        {{"skipped", skipped}, {"fraction", skip_fraction}, {"limit", 0.05}}));

    // Shared dynamics: the index is the reward gap.
    Rng cf = make_rng(derive_seed(seed, kClosedFormStream));
    std::uniform_int_distribution<int> size(2, 8);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double cf_max = 0.0;
    int cf_fail = 0;
    const int cf_arms = std::max(instances / 2, 1);
    for (int k = 0; k < cf_arms; ++k) {
        const int s_count = size(cf);
        Matrix p(s_count, s_count);
        for (int s = 0; s < s_count; ++s)
            p.row(s) = sample_dirichlet(Vector::Ones(s_count), cf).transpose();
        Vector r0(s_count), r1(s_count);
        for (int s = 0; s < s_count; ++s) {
            r0(s) = unif(cf);
            r1(s) = unif(cf);
        }
        const Vector w = whittle_indices(Arm{p, p, r0, r1});
        const double err = (w - (r1 - r0)).cwiseAbs().maxCoeff();
        cf_max = std::max(cf_max, err);
        if (!(err <= 1e-8))
            ++cf_fail;
    }
    out.push_back(check("identical_dynamics_closed_form", cf_fail == 0,
                        {{"arms", cf_arms}, {"max_abs_error", cf_max}, {"tolerance", 1e-8}, {"failures", cf_fail}}));
    return out;
}

Arm random_tiny_arm(int S, RewardModel model, Rng& rng)
{
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Arm arm;
    arm.p_passive.resize(S, S);
    arm.p_active.resize(S, S);
    for (int s = 0; s < S; ++s) {
        arm.p_passive.row(s) = sample_dirichlet(Vector::Ones(S), rng).transpose();
        arm.p_active.row(s) = sample_dirichlet(Vector::Ones(S), rng).transpose();
    }
    arm.r_passive.resize(S);
    arm.r_active.resize(S);
    for (int s = 0; s < S; ++s) {
        arm.r_passive(s) = model == RewardModel::A ? unif(rng) : 0.0;
        arm.r_active(s) = unif(rng);
    }
    return arm;
}

Json gain_suite(int instances, std::uint64_t seed, std::int64_t horizon, int reps)
{
    Rng rng = make_rng(derive_seed(seed, kGainStream));
    std::uniform_int_distribution<int> size(2, 3);
    double max_residual = 0.0, max_excess = -std::numeric_limits<double>::infinity(), max_z = 0.0;
    int evaluations = 0, residual_fail = 0, gap_fail = 0, rollout_fail = 0;
    Json rollout_failures = Json::array();
    for (int k = 0; k < instances; ++k) {
        BanditInstance inst;
        inst.budget = 1;
        inst.reward_model = k % 2 == 0 ? RewardModel::A : RewardModel::B;
        inst.r_max = 1.0;
        for (int i = 0; i < 2; ++i)
            inst.arms.push_back(random_tiny_arm(size(rng), inst.reward_model, rng));

        for (const auto& arm : inst.arms) {
            const int S = arm.num_states();
            for (int mask = 0; mask < (1 << S); ++mask) {
                ArmPolicy pol(S);
                for (int s = 0; s < S; ++s)
                    pol[s] = (mask >> s) & 1;
                const auto ev = evaluate_reward(arm, pol);
                ++evaluations;
                max_residual = std::max(max_residual, ev.bellman_residual);
                if (!(ev.bellman_residual <= 1e-9))
                    ++residual_fail;
            }
        }

        const WhittleTable table = whittle_table(inst);
        const double exact = joint_policy_gain(inst, table);
        const auto opt = joint_optimal_gain(inst, 1e-12);
        const double excess = exact - opt.gain;
        max_excess = std::max(max_excess, excess);
        if (!(excess <= 1e-10))
            ++gap_fail;

        const auto est = estimate_baseline_gain(inst, table, BaselineMethod::LongRollout, horizon, reps,
                                                derive_seed(seed, 100 + static_cast<std::uint64_t>(k)));
        const double z = est.std_error > 0.0 ? std::abs(est.mean - exact) / est.std_error
                                             : (est.mean == exact ? 0.0 : std::numeric_limits<double>::infinity());
        max_z = std::max(max_z, z);
        if (!(z <= 3.0)) {
            ++rollout_fail;
            rollout_failures.push_back(
                {{"instance", k}, {"exact", exact}, {"rollout", est.mean}, {"stderr", est.std_error}});
        }
    }
    Json out = Json::array();
    out.push_back(check("evaluation_residual", residual_fail == 0,
                        {{"evaluations", evaluations}, {"max_residual", max_residual}, {"tolerance", 1e-9}}));
    out.push_back(check("index_policy_below_optimum", gap_fail == 0,
                        {{"instances", instances}, {"max_excess", max_excess}, {"tolerance", 1e-10}}));
    out.push_back(check("rollout_vs_exact", rollout_fail == 0,
                        {{"instances", instances},
                         {"horizon", horizon},
                         {"reps", reps},
                         {"max_z", max_z},
                         {"limit_stderr", 3.0},
                         {"failures", rollout_failures}}));
    return out;
}

Json generator_suite(int instances, std::uint64_t seed)
{
    Rng rng = make_rng(derive_seed(seed, kGeneratorStream));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const int sizes[] = {3, 10, 25};
    int stochastic_fail = 0, monotone_fail = 0;
    for (int k = 0; k < instances; ++k) {
        const int S = sizes[k % 3];
        const Matrix p = random_monotone_matrix(S, unif(rng), rng);
        if (!is_exactly_stochastic(p))
            ++stochastic_fail;
        if (!is_stochastically_monotone(p))
            ++monotone_fail;
    }
    Json out = Json::array();
    out.push_back(check("exact_row_stochastic", stochastic_fail == 0,
                        {{"matrices", instances}, {"failures", stochastic_fail}}));
    out.push_back(check("stochastic_monotonicity", monotone_fail == 0,
                        {{"matrices", instances}, {"failures", monotone_fail}}));
    return out;
}

}  // namespace

Json run_verify(const VerifyOptions& options)
{
    const auto& s = options.suite;
    if (s != "whittle" && s != "gain" && s != "generator" && s != "all")
        throw ValidationError("unknown verify suite '" + s + "' (expected whittle, gain, generator or all)");
    if (options.instances < 0)
        throw ValidationError("verify: instances must be non-negative");
    auto count = [&](int fallback) { return options.instances > 0 ? options.instances : fallback; };

    Json report;
    report["schema_version"] = kSchemaVersion;
    report["suite"] = s;
    report["seed"] = options.seed;
    Json checks = Json::array();
    auto append = [&](const Json& list) {
        for (const auto& c : list)
            checks.push_back(c);
    };
    if (s == "whittle" || s == "all")
        append(whittle_suite(count(100), options.seed));
    if (s == "gain" || s == "all")
        append(gain_suite(count(50), options.seed, options.rollout_horizon, options.rollout_reps));
    if (s == "generator" || s == "all")
        append(generator_suite(count(1000), options.seed));
    bool passed = true;
    for (const auto& c : checks)
        passed = passed && c.at("passed").get<bool>();
    report["checks"] = checks;
    report["passed"] = passed;
    return report;
}

}  // namespace rblab
