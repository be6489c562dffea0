// rblab command-line front end; talks to the library only through rblab.h.

#include "rblab/rblab.h"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

using Json = nlohmann::ordered_json;

namespace {

constexpr int kSchemaVersion = 1;

struct Failure {
    int code;
};

// Owns a string returned by the library.
struct LibString {
    char* p = nullptr;
    ~LibString() { rblab_string_free(p); }
    std::string str() const { return p ? p : ""; }
};

struct Model {
    rblab_model* p = nullptr;
    ~Model() { rblab_model_free(p); }
};

void require(rblab_status st, const std::string& what)
{
    if (st != RBLAB_OK) {
        std::cerr << "rblab " << what << ": " << rblab_status_name(st) << ": " << rblab_last_error() << "\n";
        throw Failure{1};
    }
}

std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        std::cerr << "rblab: cannot open '" << path << "'\n";
        throw Failure{1};
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string env_out()
{
    const char* v = std::getenv("RBLAB_OUT");
    return v ? v : "";
}

void print_json(const Json& j) { std::cout << j.dump(2) << "\n"; }

std::string fmt(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

int cmd_gen_env(const std::string& kind, int n, int S, std::uint64_t seed, const std::string& out, bool json)
{
    Model m;
    require(rblab_model_generate(kind.c_str(), n, S, seed, &m.p), "gen-env");
    if (out.empty() || out == "-") {
        LibString text;
        require(rblab_model_to_json(m.p, &text.p), "gen-env");
        std::cout << text.str();
        return 0;
    }
    require(rblab_model_save(m.p, out.c_str()), "gen-env");
    if (json)
        print_json({{"schema_version", kSchemaVersion}, {"kind", kind}, {"n", n}, {"S", S}, {"seed", seed}, {"out", out}});
    else
        std::cout << "wrote " << out << "\n";
    return 0;
}

int cmd_whittle(const std::string& model_path, int arm, bool json)
{
    Model m;
    require(rblab_model_load(model_path.c_str(), &m.p), "whittle");
    int arms = 0;
    require(rblab_model_num_arms(m.p, &arms), "whittle");
    std::vector<int> which;
    if (arm >= 0)
        which.push_back(arm);
    else
        for (int i = 0; i < arms; ++i)
            which.push_back(i);
    Json out = {{"schema_version", kSchemaVersion}, {"model", model_path}, {"arms", Json::array()}};
    if (!json)
        std::cout << (arm >= 0 ? "state,index\n" : "arm,state,index\n");
    for (int i : which) {
        int S = 0;
        require(rblab_model_num_states(m.p, i, &S), "whittle");
        std::vector<double> w(S);
        require(rblab_whittle_indices(m.p, i, w.data(), w.size()), "whittle");
        if (json) {
            out["arms"].push_back({{"arm", i}, {"indices", w}});
            continue;
        }
        for (int s = 0; s < S; ++s)
            std::cout << (arm >= 0 ? "" : std::to_string(i) + ",") << s << "," << fmt(w[s]) << "\n";
    }
    if (json)
        print_json(out);
    return 0;
}

int cmd_run(const std::string& config_path, const std::string& out, bool has_seed, std::uint64_t seed, int jobs,
            bool json)
{
    Json cfg;
    try {
        cfg = Json::parse(read_file(config_path));
    } catch (const nlohmann::json::parse_error& e) {
        std::cerr << "rblab run: " << config_path << ": " << e.what() << "\n";
        return 1;
    }
    if (has_seed && cfg.is_object())
        cfg["master_seed"] = seed;
    const std::string outdir = !out.empty() ? out : env_out();
    LibString summary;
    const auto st = rblab_run_experiment(cfg.dump().c_str(), outdir.empty() ? nullptr : outdir.c_str(), jobs,
                                         &summary.p);
    if (summary.p) {
        const Json s = Json::parse(summary.str());
        if (json) {
            print_json(s);
        } else {
            std::cout << "results in " << s.value("output_dir", std::string()) << "\n";
            std::cout << "n,algorithm,regret_T,stderr_T\n";
            for (const auto& r : s.at("summary"))
                std::cout << r.at("n").get<int>() << "," << r.at("algorithm").get<std::string>() << ","
                          << fmt(r.at("regret_T").get<double>()) << "," << fmt(r.at("stderr_T").get<double>()) << "\n";
            for (const auto& t : s.at("trend_checks"))
                std::cout << "trend n=" << t.at("n").get<int>() << " " << t.at("algorithm").get<std::string>()
                          << ": slope " << t.at("loglog_slope").dump() << (t.at("slope_ok").get<bool>() ? " ok" : " FAIL")
                          << ", sqrt ratio " << t.at("sqrt_ratio").dump()
                          << (t.at("ratio_ok").get<bool>() ? " ok" : " FAIL") << "\n";
        }
    }
    require(st, "run");
    return 0;
}

int cmd_verify(const std::string& suite, int instances, std::uint64_t seed, const std::string& out, bool json)
{
    const std::string outdir = !out.empty() ? out : env_out();
    LibString report;
    const auto st = rblab_verify(suite.c_str(), instances, seed, outdir.empty() ? nullptr : outdir.c_str(), &report.p);
    if (!report.p) {
        require(st, "verify");
        return 1;
    }
    const Json r = Json::parse(report.str());
    if (json) {
        print_json(r);
    } else {
        for (const auto& c : r.at("checks"))
            std::cout << (c.at("passed").get<bool>() ? "PASS " : "FAIL ") << c.at("name").get<std::string>() << " "
                      << c.at("details").dump() << "\n";
        std::cout << (r.at("passed").get<bool>() ? "verify: all checks passed\n" : "verify: FAILED\n");
    }
    if (st == RBLAB_INVARIANT)
        return 1;
    require(st, "verify");
    return 0;
}

// Points come from --point n:value pairs or from a summary.csv filtered by algorithm.
int cmd_fit(const std::vector<std::string>& points, const std::string& csv, const std::string& algorithm, bool json)
{
    std::vector<double> ns, ys;
    for (const auto& p : points) {
        const auto colon = p.find(':');
        try {
            if (colon == std::string::npos)
                throw std::invalid_argument(p);
            ns.push_back(std::stod(p.substr(0, colon)));
            ys.push_back(std::stod(p.substr(colon + 1)));
        } catch (const std::exception&) {
            std::cerr << "rblab fit: bad point '" << p << "' (expected n:value)\n";
            return 2;
        }
    }
    if (!csv.empty()) {
        std::istringstream in(read_file(csv));
        std::string line;
        std::getline(in, line);
        if (line.rfind("n,algorithm,regret_T", 0) != 0) {
            std::cerr << "rblab fit: " << csv << " is not a summary.csv\n";
            return 1;
        }
        while (std::getline(in, line)) {
            std::istringstream row(line);
            std::string n, alg, r;
            if (!std::getline(row, n, ',') || !std::getline(row, alg, ',') || !std::getline(row, r, ','))
                continue;
            if (!algorithm.empty() && alg != algorithm)
                continue;
            ns.push_back(std::stod(n));
            ys.push_back(std::stod(r));
        }
    }
    rblab_fit fit{};
    require(rblab_fit_scaling(ns.data(), ys.data(), ns.size(), &fit), "fit");
    Json out = {{"schema_version", kSchemaVersion},
                {"points", ns.size()},
                {"linear", {{"p0", fit.linear[0]}, {"p1", fit.linear[1]}, {"rmse", fit.linear_rmse}}},
                {"n^1.5", nullptr},
                {"best", fit.best_is_power ? "n^1.5" : "linear"}};
    if (fit.power_available)
        out["n^1.5"] = {{"p0", fit.power[0]}, {"p1", fit.power[1]}, {"p2", fit.power[2]}, {"rmse", fit.power_rmse}};
    if (json) {
        print_json(out);
        return 0;
    }
    std::cout << "linear  p0 + p1 n:            p0=" << fmt(fit.linear[0]) << " p1=" << fmt(fit.linear[1])
              << " rmse=" << fmt(fit.linear_rmse) << "\n";
    if (fit.power_available)
        std::cout << "n^1.5   p0 + p1 n + p2 n^1.5: p0=" << fmt(fit.power[0]) << " p1=" << fmt(fit.power[1])
                  << " p2=" << fmt(fit.power[2]) << " rmse=" << fmt(fit.power_rmse) << "\n";
    else
        std::cout << "n^1.5   needs at least 4 points\n";
    std::cout << "best: " << (fit.best_is_power ? "n^1.5" : "linear") << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"rblab: restless-bandit lab (Whittle index, RB-TSDE, QWI, regret harness)"};
    app.require_subcommand(1);
    app.set_version_flag("--version", rblab_version());
    bool json = false;
    app.add_flag("--json", json, "Machine-readable JSON output");

    std::uint64_t seed = 0;

    auto* gen = app.add_subcommand("gen-env", "Generate environment A or B and write the model file");
    std::string kind = "A", out;
    int n = 10, S = 10;
    gen->add_option("--kind", kind, "Environment kind")->check(CLI::IsMember({"A", "B"}));
    gen->add_option("--n", n, "Number of arms")->check(CLI::PositiveNumber);
    gen->add_option("--S", S, "States per arm")->check(CLI::Range(2, 100000));
    gen->add_option("--seed", seed, "Random seed")->required();
    gen->add_option("--out", out, "Output model file (stdout when omitted)");
    gen->add_flag("--json", json, "Machine-readable JSON output");

    auto* wh = app.add_subcommand("whittle", "Whittle indices of a model's arms as CSV state,index");
    std::string model;
    int arm = -1;
    wh->add_option("--model", model, "Model file")->required();
    wh->add_option("--arm", arm, "Arm index (all arms when omitted)")->check(CLI::NonNegativeNumber);
    wh->add_option("--seed", seed, "Accepted for uniformity; the computation is deterministic");
    wh->add_flag("--json", json, "Machine-readable JSON output");

    auto* run = app.add_subcommand("run", "Run a regret experiment from a config file");
    std::string config;
    int jobs = 0;
    run->add_option("--config", config, "Experiment config (JSON)")->required();
    auto* run_seed = run->add_option("--seed", seed, "Override the config's master_seed");
    run->add_option("--jobs", jobs, "Parallel sample paths (default: available cores)")->check(CLI::NonNegativeNumber);
    run->add_option("--out", out, "Output directory (overrides RBLAB_OUT and the config)");
    run->add_flag("--json", json, "Machine-readable JSON output");

    auto* ver = app.add_subcommand("verify", "Oracle cross-checks; exit 1 when any check fails");
    std::string suite = "all";
    int instances = 0;
    ver->add_option("--suite", suite, "whittle | gain | generator | all")
        ->check(CLI::IsMember({"whittle", "gain", "generator", "all"}));
    ver->add_option("--instances", instances, "Instances per suite (default 100 / 50 / 1000)")
        ->check(CLI::NonNegativeNumber);
    ver->add_option("--seed", seed, "Random seed");
    ver->add_option("--out", out, "Directory for report.json (overrides RBLAB_OUT)");
    ver->add_flag("--json", json, "Machine-readable JSON output");

    auto* fit = app.add_subcommand("fit", "Fit p0 + p1 n and p0 + p1 n + p2 n^1.5 to regret-vs-n points");
    std::vector<std::string> points;
    std::string csv, algorithm;
    fit->add_option("--point", points, "n:regret pair (repeatable)");
    fit->add_option("--csv", csv, "summary.csv from a run");
    fit->add_option("--algorithm", algorithm, "Algorithm rows to use from --csv");
    fit->add_option("--seed", seed, "Accepted for uniformity; fitting is deterministic");
    fit->add_flag("--json", json, "Machine-readable JSON output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "rblab: " << e.what() << "\n\n";
        const CLI::App* sub = nullptr;
        for (const auto* s : app.get_subcommands())
            sub = s;
        std::cerr << (sub ? sub->help() : app.help());
        return 2;
    }

    try {
        if (*gen)
            return cmd_gen_env(kind, n, S, seed, out, json);
        if (*wh)
            return cmd_whittle(model, arm, json);
        if (*run)
            return cmd_run(config, out, run_seed->count() > 0, seed, jobs, json);
        if (*ver)
            return cmd_verify(suite, instances, seed, out, json);
        if (*fit)
            return cmd_fit(points, csv, algorithm, json);
    } catch (const Failure& f) {
        return f.code;
    }
    return 2;
}
