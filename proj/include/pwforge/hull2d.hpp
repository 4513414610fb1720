#pragma once

#include <complex>
#include <optional>
#include <vector>

#include "pwforge/state.hpp"

namespace pwforge {

// d = 2 lamination-hull machinery in complex coordinates (z, zeta).
// All searches run on the state normalized to r = 1 via
// (v, U) -> (v / sqrt(r), U / r), which leaves every set membership
// invariant, so certificates transfer between energy levels.

/// A direction of the d = 2 wave cone, parameterized as
/// (z, zeta) = (cos(beta) e^{i alpha}, sin(beta) e^{2 i alpha}),
/// with cos(beta) != 0 so the velocity part never degenerates.
struct LaminationDir {
    std::complex<double> z;
    std::complex<double> zeta;
};

StatePoint dir_to_state(const LaminationDir& d);

/// Certificate that w lies on a hull segment: both w + t_plus * dir and
/// w - t_minus * dir belong to the hull of the previous depth.
struct HullWitness {
    LaminationDir dir;
    double t_plus = 0.0;
    double t_minus = 0.0;
    int depth = 0;  // depth at which the certificate was found (0 = base set)
};

/// Membership in the base set V_r (rotated slice states with 0 < |c| < r/2
/// and gauge f_r < 1), with an interior clearance margin.
bool in_base_set_2d(const StatePoint& w, double r, double interior_margin);

/// The m-th direction of the fixed master sequence (golden-angle alphas
/// crossed with a ladder of mixing angles beta).
LaminationDir lamination_dir_sequence(int m);

/// The m-th endpoint-length pair (t_plus, t_minus) of the fixed master
/// sequence; early entries are symmetric dyadic lengths.
std::pair<double, double> step_pair_sequence(int m, double t_max);

/// Searches for a hull-membership certificate for w at the given depth.
/// If top_dirs is nonempty, the outermost search is restricted to those
/// directions (used by the segment search to force lattice-aligned wave
/// vectors); recursive levels always use the master sequence.
std::optional<HullWitness> hull_witness(
    const StatePoint& w, double r, const HullParams& hp,
    const std::vector<LaminationDir>& top_dirs = {});

}  // namespace pwforge
