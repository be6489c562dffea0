#pragma once

#include "model_io.hpp"

#include <cstdint>
#include <string>

namespace rblab {

struct VerifyOptions {
    std::string suite = "all";  ///< whittle | gain | generator | all
    int instances = 0;          ///< 0 = suite default (100 / 50 / 1000)
    std::uint64_t seed = 0;
    std::int64_t rollout_horizon = 1'000'000;
    int rollout_reps = 8;
};

/// Oracle cross-checks:
///   whittle   - adaptive greedy vs charge bisection on reset arms (1e-6), with
///               grid-flagged non-indexable arms skipped (at most 5%), and the
///               closed form r(s,1) - r(s,0) when both actions share dynamics;
///   gain      - evaluation residuals, exact joint gain of the index policy vs
///               the joint optimum, long rollout vs exact within 3 stderr;
///   generator - exact stochasticity and monotonicity of random monotone matrices.
/// Returns a JSON report with "passed" and per-check details.
Json run_verify(const VerifyOptions& options);

}  // namespace rblab
