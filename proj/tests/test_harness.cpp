#include "errors.hpp"
#include "harness.hpp"
#include "mdp_eval.hpp"
#include "model_io.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

using namespace rblab;

namespace {

Json tiny_config_json()
{
    return Json::parse(R"({"environment": "A", "n": [2, 3], "S": 4, "T": 300, "num_sample_paths": 3,
                           "algorithms": ["rb-tsde", "qwi", "whittle-oracle"], "master_seed": 5,
                           "rollout_horizon": 20000, "rollout_reps": 2, "initial_burn_in": 50})");
}

}  // namespace

TEST_CASE("config parsing is strict")
{
    auto j = tiny_config_json();
    const auto c = ExperimentConfig::from_json(j);
    CHECK(c.n_values == std::vector<int>{2, 3});
    CHECK(c.instance_mode == InstanceMode::Bayesian);
    CHECK(c.initial_state == InitialState::Stationary);
    CHECK(ExperimentConfig::from_json(c.to_json()).to_json() == c.to_json());

    auto missing = j;
    missing.erase("master_seed");
    CHECK_THROWS_AS(ExperimentConfig::from_json(missing), ValidationError);
    auto unknown = j;
    unknown["horizon"] = 10;
    CHECK_THROWS_AS(ExperimentConfig::from_json(unknown), ValidationError);
    auto qkey = j;
    qkey["qwi"] = {{"alpha", 0.1}};
    CHECK_THROWS_AS(ExperimentConfig::from_json(qkey), ValidationError);
    auto version = j;
    version["schema_version"] = 2;
    CHECK_THROWS_AS(ExperimentConfig::from_json(version), ValidationError);
    auto alg = j;
    alg["algorithms"] = {"ucrl"};
    CHECK_THROWS_AS(ExperimentConfig::from_json(alg), ValidationError);
    auto wrong_type = j;
    wrong_type["T"] = "long";
    CHECK_THROWS_AS(ExperimentConfig::from_json(wrong_type), ValidationError);
    auto scalar_n = j;
    scalar_n["n"] = 4;
    CHECK(ExperimentConfig::from_json(scalar_n).n_values == std::vector<int>{4});
}

TEST_CASE("log-log slope")
{
    std::vector<double> curve(1001);
    for (std::size_t t = 0; t < curve.size(); ++t)
        curve[t] = 3.0 * std::sqrt(static_cast<double>(t));
    CHECK(loglog_slope(curve, 200, 1000) == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(loglog_slope(std::vector<double>(1001, 0.0), 200, 1000) == 0.0);
    curve[500] = -1.0;
    CHECK(std::isnan(loglog_slope(curve, 200, 1000)));
}

TEST_CASE("scaling fits recover exact coefficients")
{
    const std::vector<double> n{10, 20, 30, 40, 50, 60, 70, 80};
    std::vector<double> y, lin;
    for (double x : n) {
        y.push_back(50.0 + 4.0 * x + 0.7 * std::pow(x, 1.5));
        lin.push_back(12.0 + 3.0 * x);
    }
    const auto f = fit_scaling(n, y);
    REQUIRE(f.power.available);
    CHECK(f.power.coefficients[0] == doctest::Approx(50.0).epsilon(1e-8));
    CHECK(f.power.coefficients[1] == doctest::Approx(4.0).epsilon(1e-8));
    CHECK(f.power.coefficients[2] == doctest::Approx(0.7).epsilon(1e-8));
    CHECK(f.best == "n^1.5");
    const auto g = fit_scaling(n, lin);
    CHECK(g.linear.coefficients[0] == doctest::Approx(12.0).epsilon(1e-10));
    CHECK(g.linear.coefficients[1] == doctest::Approx(3.0).epsilon(1e-10));
    CHECK(g.linear.rmse <= 1e-9);

    const auto three = fit_scaling({2, 4, 8}, {1, 2, 3});
    CHECK(three.linear.available);
    CHECK_FALSE(three.power.available);
    CHECK(three.best == "linear");
    CHECK_THROWS(fit_scaling({2, 4}, {1, 2}));
    CHECK_THROWS_AS(fit_scaling({5, 5, 5, 5}, {1, 2, 3, 4}), NumericalError);
}

TEST_CASE("rollout baseline agrees with the exact joint gain")
{
    Rng rng = make_rng(91);
    BanditInstance inst;
    inst.arms = {testutil::random_arm(3, rng), testutil::random_arm(2, rng)};
    inst.budget = 1;
    inst.r_max = 1.0;
    const auto table = whittle_table(inst);
    const auto exact = estimate_baseline_gain(inst, table, BaselineMethod::ExactJoint, 10, 1, 0);
    CHECK(exact.std_error == 0.0);
    CHECK(exact.mean == doctest::Approx(joint_policy_gain(inst, table)));
    const auto roll = estimate_baseline_gain(inst, table, BaselineMethod::LongRollout, 200000, 4, 3);
    CHECK(roll.std_error > 0.0);
    CHECK(std::abs(roll.mean - exact.mean) <= 4.0 * roll.std_error);
    const auto again = estimate_baseline_gain(inst, table, BaselineMethod::LongRollout, 200000, 4, 3);
    CHECK(again.mean == roll.mean);
}

TEST_CASE("regret curves average the per-path estimator")
{
    for (const char* estimator : {"baseline", "paired"}) {
        auto j = tiny_config_json();
        j["regret_estimator"] = estimator;
        const auto c = ExperimentConfig::from_json(j);
        const bool paired = c.regret_estimator == RegretEstimator::Paired;
        std::vector<PathOutcome> paths;
        for (int n : c.n_values)
            for (int p = 0; p < c.num_sample_paths; ++p)
                paths.push_back(run_sample_path(c, n, p));
        const auto res = aggregate(c, paths);
        REQUIRE(res.curves.size() == 6);
        for (const auto& curve : res.curves) {
            CHECK(curve.mean.size() == static_cast<std::size_t>(c.T) + 1);
            CHECK(curve.mean[0] == 0.0);
            for (std::int64_t t : {1, 150, 300}) {
                double sum = 0.0;
                int count = 0;
                for (const auto& p : paths)
                    if (p.n == curve.n) {
                        const double cum = p.cumulative.at(curve.algorithm)[t - 1];
                        sum += paired ? p.oracle_cumulative[t - 1] - cum : t * p.baseline.mean - cum;
                        ++count;
                    }
                CHECK(curve.mean[t] == doctest::Approx(sum / count).epsilon(1e-12));
            }
            if (paired && curve.algorithm == "whittle-oracle")
                CHECK(*std::max_element(curve.mean.begin(), curve.mean.end()) == 0.0);
        }
    }
}

TEST_CASE("the paired oracle term has mean t times the gain")
{
    // Stationary start: E[cum_oracle(t)] = t J, checked against the exact joint gain.
    auto j = tiny_config_json();
    j["n"] = 2;
    j["S"] = 3;
    j["T"] = 400;
    j["instance_mode"] = "fixed";
    j["baseline_gain_method"] = "exact_joint";
    j["algorithms"] = {"whittle-oracle"};
    const auto c = ExperimentConfig::from_json(j);
    const int paths = 400;
    double sum = 0.0, sumsq = 0.0, gain = 0.0;
    for (int p = 0; p < paths; ++p) {
        const auto o = run_sample_path(c, 2, p);
        const double x = o.oracle_cumulative.back();
        sum += x;
        sumsq += x * x;
        gain = o.baseline.mean;
    }
    const double mean = sum / paths;
    const double se = std::sqrt((sumsq / paths - mean * mean) / (paths - 1));
    CHECK(std::abs(mean - c.T * gain) <= 4.0 * se);
}

TEST_CASE("aggregation is invariant to path order and thread count")
{
    const auto c = ExperimentConfig::from_json(tiny_config_json());
    std::vector<PathOutcome> paths;
    for (int n : c.n_values)
        for (int p = 0; p < c.num_sample_paths; ++p)
            paths.push_back(run_sample_path(c, n, p));
    const auto res = aggregate(c, paths);

    // Order of the path list does not matter.
    auto shuffled = paths;
    std::reverse(shuffled.begin(), shuffled.end());
    std::swap(shuffled[1], shuffled[3]);
    const auto res2 = aggregate(c, shuffled);
    for (std::size_t k = 0; k < res.curves.size(); ++k) {
        CHECK(res.curves[k].mean == res2.curves[k].mean);
        CHECK(res.curves[k].std_error == res2.curves[k].std_error);
    }

    // Thread count does not matter either.
    const auto one = run_experiment(c, 1);
    const auto three = run_experiment(c, 3);
    for (std::size_t k = 0; k < one.curves.size(); ++k) {
        CHECK(one.curves[k].mean == res.curves[k].mean);
        CHECK(three.curves[k].mean == res.curves[k].mean);
    }
}

TEST_CASE("fixed instances share the model across paths")
{
    auto j = tiny_config_json();
    j["instance_mode"] = "fixed";
    j["n"] = 2;
    j["initial_state"] = "zero";
    const auto c = ExperimentConfig::from_json(j);
    const auto a = run_sample_path(c, 2, 0);
    const auto b = run_sample_path(c, 2, 1);
    CHECK(a.baseline.mean == b.baseline.mean);
    CHECK(a.initial.states == std::vector<int>{0, 0});
    CHECK(a.seed != b.seed);
}

TEST_CASE("emitted result files")
{
    auto c = ExperimentConfig::from_json(tiny_config_json());
    c.write_traces = true;
    c.qwi_grid = {{0.1, 0.01}, {0.3, 0.1}};
    const auto res = run_experiment(c, 2);
    const auto dir = std::filesystem::temp_directory_path() / "rblab_unit_emit";
    std::filesystem::remove_all(dir);
    const auto summary = emit_results(res, dir);
    for (const char* f : {"summary.csv", "fit.json", "run_metadata.json", "regret_vs_t.svg",
                          "regret_over_sqrt_t.svg", "regret_vs_n.svg", "qwi_grid.csv", "curves/n2_rb-tsde.csv",
                          "curves/n3_qwi.csv"})
        CHECK_MESSAGE(std::filesystem::exists(dir / f), f);
    CHECK(read_text_file(dir / "summary.csv").rfind("n,algorithm,regret_T,stderr_T\n", 0) == 0);
    const auto meta = Json::parse(read_text_file(dir / "run_metadata.json"));
    CHECK(meta.contains("episodes"));
    CHECK(meta.contains("baseline_gains"));
    CHECK(summary.at("schema_version") == 1);
    CHECK(res.qwi_grid.size() == 2);
    std::filesystem::remove_all(dir);
}

TEST_CASE("shipped configs parse")
{
    int count = 0;
    for (const auto& e : std::filesystem::directory_iterator(RBLAB_CONFIG_DIR)) {
        if (e.path().extension() != ".json")
            continue;
        ++count;
        CHECK_NOTHROW(ExperimentConfig::from_json(Json::parse(read_text_file(e.path()))));
    }
    CHECK(count >= 5);
}
