#pragma once

#include <array>
#include <vector>

#include "pwforge/errors.hpp"

namespace pwforge {

/// Oscillation profile ladder: h0 is a mollified two-level step taking the
/// value -mu2 on a mu1-fraction of the unit period and +mu1 on the rest
/// (zero mean); h1..h6 are successive zero-mean primitives, so that the j-th
/// derivative of h_k reproduces h_{k-j} and sup norms are non-increasing up
/// the ladder.
struct ProfileLadder {
    double mu1 = 0.5;
    double mu2 = 0.5;
    double delta = 0.0;  // mollification measure bound (fraction of a period)
    int m = 0;           // tabulation resolution
    std::array<std::vector<double>, 7> h;

    /// Periodic evaluation of h_k by cubic interpolation; s in profile
    /// periods (one unit per oscillation).
    double eval(int k, double s) const;

    double sup(int k) const;
    double mean_abs(int k) const;  // |mean| of the tabulated profile
};

/// Builds the ladder. Requires mu1, mu2 > 0 with mu1 + mu2 = 1,
/// 0 < delta < min(mu1, mu2)/2, m >= 256 and delta * m >= 16 (the mollifier
/// must be resolved by the table).
ProfileLadder build_profiles(double mu1, double mu2, double delta, int m = 8192);

}  // namespace pwforge
