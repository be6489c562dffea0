#include "rblab/rblab.h"

#include "envgen.hpp"
#include "errors.hpp"
#include "harness.hpp"
#include "model_io.hpp"
#include "rng.hpp"
#include "verify.hpp"
#include "whittle.hpp"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

struct rblab_model {
    rblab::BanditInstance instance;
};

namespace {

thread_local std::string g_last_error;

rblab_status fail(rblab_status status, const std::string& message)
{
    g_last_error = message;
    return status;
}

// Maps the exception in flight to a status code.
rblab_status translate()
{
    try {
        throw;
    } catch (const rblab::InvariantViolation& e) {
        return fail(RBLAB_INVARIANT, e.what());
    } catch (const rblab::GuardrailError& e) {
        return fail(RBLAB_GUARDRAIL, e.what());
    } catch (const rblab::NumericalError& e) {
        return fail(RBLAB_NUMERICAL, e.what());
    } catch (const rblab::IoError& e) {
        return fail(RBLAB_IO, e.what());
    } catch (const rblab::ParseError& e) {
        return fail(RBLAB_PARSE, e.what());
    } catch (const nlohmann::json::parse_error& e) {
        return fail(RBLAB_PARSE, e.what());
    } catch (const rblab::ValidationError& e) {
        return fail(RBLAB_INVALID_ARGUMENT, e.what());
    } catch (const nlohmann::json::exception& e) {
        return fail(RBLAB_INVALID_ARGUMENT, e.what());
    } catch (const std::bad_alloc&) {
        return fail(RBLAB_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return fail(RBLAB_INTERNAL, e.what());
    } catch (...) {
        return fail(RBLAB_INTERNAL, "unknown error");
    }
}

template <class Fn>
rblab_status guarded(Fn fn)
{
    g_last_error.clear();
    try {
        return fn();
    } catch (...) {
        return translate();
    }
}

char* dup_string(const std::string& s)
{
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out)
        throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

rblab_status adopt(rblab::BanditInstance instance, rblab_model** out)
{
    const auto problems = rblab::validate(instance);
    if (!problems.empty())
        return fail(RBLAB_INVALID_ARGUMENT, "model invalid: " + problems.front());
    *out = new rblab_model{std::move(instance)};
    return RBLAB_OK;
}

}  // namespace

extern "C" {

const char* rblab_last_error(void) { return g_last_error.c_str(); }

const char* rblab_version(void) { return "1.0.0"; }

const char* rblab_status_name(rblab_status status)
{
    switch (status) {
    case RBLAB_OK: return "ok";
    case RBLAB_INVALID_ARGUMENT: return "invalid_argument";
    case RBLAB_IO: return "io";
    case RBLAB_PARSE: return "parse";
    case RBLAB_NUMERICAL: return "numerical";
    case RBLAB_GUARDRAIL: return "guardrail";
    case RBLAB_INVARIANT: return "invariant";
    case RBLAB_INTERNAL: return "internal";
    }
    return "unknown";
}

rblab_status rblab_model_generate(const char* kind, int n, int S, uint64_t seed, rblab_model** out)
{
    return guarded([&] {
        if (!kind || !out)
            return fail(RBLAB_INVALID_ARGUMENT, "null argument");
        *out = nullptr;
        auto rng = rblab::make_rng(rblab::derive_seed(seed, rblab::stream::true_model));
        return adopt(rblab::make_environment(rblab::environment_kind_from_string(kind), n, S, rng), out);
    });
}

rblab_status rblab_model_load(const char* path, rblab_model** out)
{
    return guarded([&] {
        if (!path || !out)
            return fail(RBLAB_INVALID_ARGUMENT, "null argument");
        *out = nullptr;
        return adopt(rblab::load_instance(path), out);
    });
}

rblab_status rblab_model_from_json(const char* json, rblab_model** out)
{
    return guarded([&] {
        if (!json || !out)
            return fail(RBLAB_INVALID_ARGUMENT, "null argument");
        *out = nullptr;
        return adopt(rblab::instance_from_json(rblab::Json::parse(json)), out);
    });
}

rblab_status rblab_model_save(const rblab_model* model, const char* path)
{
    return guarded([&] {
        if (!model || !path)
            return fail(RBLAB_INVALID_ARGUMENT, "null argument");
        rblab::save_instance(model->instance, path);
        return RBLAB_OK;
    });
}

rblab_status rblab_model_to_json(const rblab_model* model, char** json_out)
{
    return guarded([&] {
        if (!model || !json_out)
            return fail(RBLAB_INVALID_ARGUMENT, "null argument");
        *json_out = dup_string(rblab::dump_json(rblab::instance_to_json(model->instance)));
        return RBLAB_OK;
    });
}

void rblab_model_free(rblab_model* model) { delete model; }

rblab_status rblab_model_num_arms(const rblab_model* model, int* out)
{
    if (!model || !out)
        return fail(RBLAB_INVALID_ARGUMENT, "null argument");
    *out = model->instance.num_arms();
    return RBLAB_OK;
}

rblab_status rblab_model_num_states(const rblab_model* model, int arm, int* out)
{
    if (!model || !out)
        return fail(RBLAB_INVALID_ARGUMENT, "null argument");
    if (arm < 0 || arm >= model->instance.num_arms())
        return fail(RBLAB_INVALID_ARGUMENT, "arm index out of range");
    *out = model->instance.arms[arm].num_states();
    return RBLAB_OK;
}

rblab_status rblab_model_validate(const rblab_model* model, int* violations)
{
    return guarded([&] {
        if (!model)
            return fail(RBLAB_INVALID_ARGUMENT, "null argument");
        const auto problems = rblab::validate(model->instance);
        if (violations)
            *violations = static_cast<int>(problems.size());
        return problems.empty() ? RBLAB_OK : fail(RBLAB_INVALID_ARGUMENT, problems.front());
    });
}

rblab_status rblab_whittle_indices(const rblab_model* model, int arm, double* out, size_t capacity)
{
    return guarded([&] {
        if (!model || !out)
            return fail(RBLAB_INVALID_ARGUMENT, "null argument");
        if (arm < 0 || arm >= model->instance.num_arms())
            return fail(RBLAB_INVALID_ARGUMENT, "arm index out of range");
        const auto& a = model->instance.arms[arm];
        if (capacity < static_cast<size_t>(a.num_states()))
            return fail(RBLAB_INVALID_ARGUMENT, "output buffer smaller than the number of states");
        const rblab::Vector w = rblab::whittle_indices(a);
        for (int s = 0; s < a.num_states(); ++s)
            out[s] = w(s);
        return RBLAB_OK;
    });
}

rblab_status rblab_run_experiment(const char* config_json, const char* outdir_override, int jobs, char** summary_json)
{
    return guarded([&] {
        if (!config_json)
            return fail(RBLAB_INVALID_ARGUMENT, "null argument");
        if (summary_json)
            *summary_json = nullptr;
        auto config = rblab::ExperimentConfig::from_json(rblab::Json::parse(config_json));
        if (outdir_override && *outdir_override)
            config.output_dir = outdir_override;
        const auto result = rblab::run_experiment(config, jobs);
        auto summary = rblab::emit_results(result, config.output_dir);
        summary["output_dir"] = config.output_dir;
        if (summary_json)
            *summary_json = dup_string(summary.dump(2));
        if (config.strict_trends && !result.trends_ok())
            return fail(RBLAB_INVARIANT, "trend checks failed (see trend_checks in run_metadata.json)");
        return RBLAB_OK;
    });
}

rblab_status rblab_verify(const char* suite, int instances, uint64_t seed, const char* outdir, char** report_json)
{
    return guarded([&] {
        if (!suite)
            return fail(RBLAB_INVALID_ARGUMENT, "null argument");
        if (report_json)
            *report_json = nullptr;
        rblab::VerifyOptions opt;
        opt.suite = suite;
        opt.instances = instances > 0 ? instances : 0;
        opt.seed = seed;
        const auto report = rblab::run_verify(opt);
        if (outdir && *outdir) {
            std::error_code ec;
            std::filesystem::create_directories(outdir, ec);
            if (ec)
                return fail(RBLAB_IO, std::string("cannot create ") + outdir + ": " + ec.message());
            rblab::write_text_file(std::filesystem::path(outdir) / "report.json", rblab::dump_json(report));
        }
        if (report_json)
            *report_json = dup_string(report.dump(2));
        if (!report.at("passed").get<bool>())
            return fail(RBLAB_INVARIANT, "verification failed (see report)");
        return RBLAB_OK;
    });
}

rblab_status rblab_fit_scaling(const double* n, const double* regret, size_t count, rblab_fit* out)
{
    return guarded([&] {
        if (!n || !regret || !out)
            return fail(RBLAB_INVALID_ARGUMENT, "null argument");
        const auto fit = rblab::fit_scaling(std::vector<double>(n, n + count), std::vector<double>(regret, regret + count));
        *out = rblab_fit{};
        out->linear_available = fit.linear.available;
        for (std::size_t k = 0; k < fit.linear.coefficients.size(); ++k)
            out->linear[k] = fit.linear.coefficients[k];
        out->linear_rmse = fit.linear.rmse;
        out->power_available = fit.power.available;
        for (std::size_t k = 0; k < fit.power.coefficients.size(); ++k)
            out->power[k] = fit.power.coefficients[k];
        out->power_rmse = fit.power.rmse;
        out->best_is_power = fit.best == "n^1.5";
        return RBLAB_OK;
    });
}

void rblab_string_free(char* s) { std::free(s); }

}  // extern "C"
