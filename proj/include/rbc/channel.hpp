#pragma once

#include <cmath>

#include "rbc/bits.hpp"
#include "rbc/errors.hpp"

namespace rbc {

// One use of the correlated binary sampling channel.
struct ChannelDraw {
    Bit y = 0;       // codeword bit
    double u = 0.0;  // auxiliary uniform
    double q = 0.0;  // model probability of a one
    Bit b = 0;       // output
};

inline void check_probability(double q) {
    if (!(q >= 0.0 && q <= 1.0)) throw InvalidArgument("probability outside [0,1]");
}

// B = 1{((1 - y) + u) / 2 <= q}. Marginally over y ~ Bern(1/2) and u ~ U[0,1),
// B ~ Bern(q); B agrees with y with probability 1 - |q - 1/2|.
inline Bit cbsc_sample(double q, Bit y, double u) {
    check_probability(q);
    return ((1.0 - y) + u) / 2.0 <= q ? 1 : 0;
}

inline ChannelDraw cbsc_draw(double q, Bit y, double u) {
    return {y, u, q, cbsc_sample(q, y, u)};
}

// Plain Bernoulli sampling with the same uniform convention.
inline Bit bernoulli_sample(double q, double u) {
    check_probability(q);
    return u <= q ? 1 : 0;
}

// P(B = Y) = (min(2q, 1) + min(2 - 2q, 1)) / 2 = 1 - |q - 1/2|.
inline double match_prob(double q) {
    check_probability(q);
    return 1.0 - std::fabs(q - 0.5);
}

}  // namespace rbc
