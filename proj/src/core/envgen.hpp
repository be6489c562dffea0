#pragma once

#include "arm_model.hpp"
#include "rng.hpp"

#include <vector>

namespace rblab {

enum class EnvironmentKind { A, B };

EnvironmentKind environment_kind_from_string(const std::string& s);
const char* to_string(EnvironmentKind k);

/// Random stochastically monotone S x S matrix. Entries live on the dyadic
/// grid k / 2^52, so every row sums to exactly 1 and every tail-sum
/// comparison is exact in double arithmetic.
Matrix random_monotone_matrix(int S, double d, Rng& rng);

/// Sign of the exact (infinitely precise) sum of the given doubles.
int exact_sum_sign(const std::vector<double>& terms);

/// Every row sums to exactly 1 with nonnegative entries, no rounding slack.
bool is_exactly_stochastic(const Matrix& p);

/// F_ij <= F_lj for all i <= l and all j, with F_ij = sum_{y >= j} P_iy,
/// decided in exact arithmetic.
bool is_stochastically_monotone(const Matrix& p);

/// Rewards of the two reference environments for states 0..S-1 (labels
/// 1..S shifted down by one).
Vector environment_passive_rewards(EnvironmentKind kind, int S);
Vector environment_active_rewards(EnvironmentKind kind, int S);

/// Matrix with every row equal to e_0 (active action resets to state 0).
Matrix reset_matrix(int S);

/// One reference-environment arm: reset-on-active, monotone passive matrix
/// with spread d.
Arm make_reset_arm(EnvironmentKind kind, int S, double d, Rng& rng);

/// Environment A or B with n arms of S states, budget 1, d = 0.5 / S.
BanditInstance make_environment(EnvironmentKind kind, int n, int S, Rng& rng);

}  // namespace rblab
