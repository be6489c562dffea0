#pragma once

#include "arm_model.hpp"
#include "rng.hpp"

#include <random>

namespace testutil {

using rblab::Arm;
using rblab::Matrix;
using rblab::Rng;
using rblab::Vector;

// Strictly positive random stochastic matrix (rows ~ normalized uniforms).
inline Matrix random_stochastic(int S, Rng& rng, double floor = 0.0)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Matrix p(S, S);
    for (int r = 0; r < S; ++r) {
        for (int c = 0; c < S; ++c)
            p(r, c) = floor + u(rng);
        p.row(r) /= p.row(r).sum();
    }
    return p;
}

inline Vector random_vector(int S, Rng& rng, double lo = 0.0, double hi = 1.0)
{
    std::uniform_real_distribution<double> u(lo, hi);
    Vector v(S);
    for (int s = 0; s < S; ++s)
        v(s) = u(rng);
    return v;
}

inline Arm random_arm(int S, Rng& rng)
{
    return Arm{random_stochastic(S, rng, 0.05), random_stochastic(S, rng, 0.05), random_vector(S, rng),
               random_vector(S, rng)};
}

// P^t r for large t; every entry tends to the gain when P is positive.
inline Vector limit_gain(const Matrix& p, const Vector& r, int steps = 5000)
{
    Vector v = r;
    for (int t = 0; t < steps; ++t)
        v = p * v;
    return v;
}

}  // namespace testutil
