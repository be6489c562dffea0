#pragma once

#include "arm_model.hpp"
#include "model_io.hpp"
#include "rng.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

namespace rblab {

/// Which transition rows the learner treats as unknown.
enum class LearnMode {
    BothActions,  ///< Dirichlet posterior over P(.|s,0) and P(.|s,1)
    PassiveOnly,  ///< active dynamics known and fixed, only P(.|s,0) learned
};

const char* to_string(LearnMode mode);
LearnMode learn_mode_from_string(const std::string& s);

struct ArmDynamics {
    Matrix p_passive;
    Matrix p_active;
};

struct EmpiricalRow {
    Vector row;
    bool visited = false;
};

/// Dirichlet posterior over every (arm, state, action) transition row plus
/// the visit counters N(s, a) and N(s, a, s').
class PosteriorState {
public:
    /// Uniform concentration on every row. `known_active` must hold one S x S
    /// matrix per arm in PassiveOnly mode and be empty otherwise.
    static PosteriorState init_prior(const std::vector<int>& num_states, double concentration = 1.0,
                                     LearnMode mode = LearnMode::BothActions,
                                     std::vector<Matrix> known_active = {});

    /// Replaces one prior row; only allowed before that row has observations.
    void set_prior_row(int arm, int state, int action, const Vector& row);

    void observe(int arm, int state, int action, int next_state);

    /// One draw per learned row from Dirichlet(counts row), normalized.
    std::vector<ArmDynamics> sample_model(Rng& rng) const;

    Vector posterior_mean(int arm, int state, int action) const;
    /// transitions / (1 v visits); all-zero and unvisited when never seen.
    EmpiricalRow empirical_row(int arm, int state, int action) const;

    int num_arms() const { return static_cast<int>(arms_.size()); }
    int num_states(int arm) const { return arms_[arm].S; }
    LearnMode mode() const { return mode_; }
    const Vector counts_row(int arm, int state, int action) const;
    std::int64_t visits(int arm, int state, int action) const;
    std::int64_t transitions(int arm, int state, int action, int next_state) const;
    std::int64_t observed_steps(int arm) const;

    /// Visit counts flattened as [arm][state][action].
    const std::vector<std::int64_t>& visit_vector() const { return visit_flat_; }

    /// Empty when the conservation invariants hold.
    std::vector<std::string> check_invariants() const;

    Json to_json() const;
    static PosteriorState from_json(const Json& j);

private:
    struct ArmState {
        int S = 0;
        std::array<Matrix, 2> prior;
        std::array<Matrix, 2> counts;
        std::array<std::vector<std::int64_t>, 2> transitions;  // S*S row-major
        std::optional<Matrix> known_active;
    };

    void check_index(int arm, int state, int action) const;
    std::size_t flat(int arm, int state, int action) const { return offsets_[arm] + 2 * state + action; }

    LearnMode mode_ = LearnMode::BothActions;
    std::vector<ArmState> arms_;
    std::vector<std::size_t> offsets_;
    std::vector<std::int64_t> visit_flat_;
};

/// Dirichlet(alpha) draw; the result sums to one.
Vector sample_dirichlet(const Vector& alpha, Rng& rng);

/// Model file JSON plus a "posterior" block, for checkpointing long sweeps.
Json posterior_snapshot(const BanditInstance& instance, const PosteriorState& post);

}  // namespace rblab
