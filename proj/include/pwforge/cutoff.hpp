#pragma once

#include <vector>

#include "pwforge/grid.hpp"

namespace pwforge {

/// Axis-aligned box inside the fundamental domain [0, 2pi]^d. An axis whose
/// extent covers the whole period wraps around (slab regions); cutoffs do
/// not ramp such axes.
struct Box {
    std::vector<double> lo, hi;

    int dim() const { return static_cast<int>(lo.size()); }
    double side(int ax) const { return hi[ax] - lo[ax]; }
    double volume() const;
    bool contains(const std::vector<double>& x) const;
    std::vector<double> center() const;
    bool full_axis(int ax) const;
};

/// Smooth tensor-product plateau bump: exactly 1 on the ramp-shrunk box,
/// exactly 0 outside the box, C-infinity ramps in between. The ramp width is
/// chosen as the widest satisfying vol({x in box : phi != 1}) < delta_volume;
/// throws resolution_error when that width falls under min_ramp_cells grid
/// cells (box too small for the requested delta at this resolution). Callers
/// that differentiate the bump should pass a stricter ramp floor.
ScalarField cutoff_bump(const Box& box, double delta_volume,
                        const TorusGrid& grid, double min_ramp_cells = 0.5);

/// Ramp width selected by cutoff_bump for the given inputs (exposed so
/// callers can pre-check resolution feasibility).
double cutoff_ramp_width(const Box& box, double delta_volume);

/// Volume of {x in box : phi != 1} for ramp width w per face.
double cutoff_violation_volume(const Box& box, double w);

/// C-infinity monotone step: exactly 0 for t <= 0, exactly 1 for t >= 1.
double smooth_step01(double t);

}  // namespace pwforge
