#pragma once

// Source models. Case I emits pairs with opposite, uniformly random
// polarization. Case II inserts a pre-polarizer in each arm: pairs are drawn
// as in Case I and redrawn until both particles leave their pre-polarizer
// through the +1 channel, so every delivered pair carries exactly (eta1, eta2).

#include "eprsim/core.hpp"
#include "eprsim/station.hpp"

namespace eprsim {

/// Case-I pair n: xi1 = 2*pi*u, xi2 = xi1 + pi/2.
inline EmittedPair emit_pair_case1(std::uint64_t n, RngStream& source, double emission_spacing) {
    EmittedPair p;
    p.pair_index = n;
    p.xi1 = Angle(kTwoPi * source.uniform());
    p.xi2 = p.xi1 + kPi / 2.0;
    p.emission_time = static_cast<double>(n) * emission_spacing;
    return p;
}

struct Case2Emission {
    EmittedPair pair;
    std::uint32_t attempts = 0;  // source attempts consumed for this pair
};

/// Case-II pair n. Each attempt draws a Case-I pair and sends both particles
/// through the pre-polarizers (the station polarizer rule, reused verbatim);
/// the pair is delivered once both exit in channel +1, with polarizations
/// (eta1, eta2).
inline Case2Emission emit_pair_case2(std::uint64_t n, Angle eta1, Angle eta2, RngStream& source,
                                     RngStream& prepol1, RngStream& prepol2,
                                     double emission_spacing) {
    Case2Emission out;
    for (;;) {
        ++out.attempts;
        Angle xi1(kTwoPi * source.uniform());
        Angle xi2 = xi1 + kPi / 2.0;
        PolarizerResult a = polarize(xi1, eta1, prepol1);
        PolarizerResult b = polarize(xi2, eta2, prepol2);
        if (a.outcome == +1 && b.outcome == +1) break;
    }
    out.pair.pair_index = n;
    out.pair.xi1 = eta1;
    out.pair.xi2 = eta2;
    out.pair.emission_time = static_cast<double>(n) * emission_spacing;
    return out;
}

}  // namespace eprsim
