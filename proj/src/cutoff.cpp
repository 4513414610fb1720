#include "pwforge/cutoff.hpp"

#include <algorithm>
#include <cmath>

namespace pwforge {

namespace {

double ramp_piece(double t) { return t <= 0.0 ? 0.0 : std::exp(-1.0 / t); }

// Monotone C2-flat base ramp with moderate high-order derivatives
// (sup of the 6th derivative is (2pi)^5, against ~5e7 for exponential
// smoothsteps, which matters once six derivatives land on the cutoff).
double base_ramp(double t) {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    return t - std::sin(2.0 * M_PI * t) / (2.0 * M_PI);
}

}  // namespace

double smooth_step01(double t) {
    const double a = ramp_piece(t);
    const double b = ramp_piece(1.0 - t);
    return a / (a + b);
}

bool Box::full_axis(int ax) const {
    return side(ax) >= 2.0 * M_PI * (1.0 - 1e-12);
}

double cutoff_violation_volume(const Box& box, double w) {
    double vol = 1.0, plateau = 1.0;
    for (int ax = 0; ax < box.dim(); ++ax) {
        vol *= box.side(ax);
        // A full-period axis wraps around and needs no ramp.
        plateau *= box.full_axis(ax) ? box.side(ax)
                                     : std::max(0.0, box.side(ax) - 2.0 * w);
    }
    return vol - plateau;
}

double Box::volume() const {
    double v = 1.0;
    for (int ax = 0; ax < dim(); ++ax) v *= side(ax);
    return v;
}

bool Box::contains(const std::vector<double>& x) const {
    for (int ax = 0; ax < dim(); ++ax)
        if (x[ax] < lo[ax] || x[ax] > hi[ax]) return false;
    return true;
}

std::vector<double> Box::center() const {
    std::vector<double> c(lo.size());
    for (int ax = 0; ax < dim(); ++ax) c[ax] = 0.5 * (lo[ax] + hi[ax]);
    return c;
}

double cutoff_ramp_width(const Box& box, double delta_volume) {
    if (!(delta_volume > 0.0) || delta_volume >= box.volume())
        throw precondition_error("cutoff: delta must lie in (0, vol(box))");
    double min_side = std::numeric_limits<double>::infinity();
    for (int ax = 0; ax < box.dim(); ++ax)
        if (!box.full_axis(ax)) min_side = std::min(min_side, box.side(ax));
    if (!std::isfinite(min_side)) return 0.0;  // every axis wraps: no ramps
    // Widest ramp with violation volume <= 0.9 delta, capped at a third of
    // the shortest ramped side.
    double lo = 0.0, hi = min_side / 3.0;
    if (cutoff_violation_volume(box, hi) <= 0.9 * delta_volume) return hi;
    for (int i = 0; i < 60; ++i) {
        const double mid = 0.5 * (lo + hi);
        (cutoff_violation_volume(box, mid) <= 0.9 * delta_volume ? lo : hi) = mid;
    }
    return lo;
}

ScalarField cutoff_bump(const Box& box, double delta_volume,
                        const TorusGrid& grid, double min_ramp_cells) {
    const int d = grid.dim();
    if (box.dim() != d) throw precondition_error("cutoff: box/grid dimension mismatch");
    bool any_ramped = false;
    for (int ax = 0; ax < d; ++ax)
        if (!box.full_axis(ax)) any_ramped = true;
    const double w = cutoff_ramp_width(box, delta_volume);
    double dxmax = grid.dx(0);
    for (int ax = 1; ax < d; ++ax) dxmax = std::max(dxmax, grid.dx(ax));
    if (any_ramped && w < min_ramp_cells * dxmax)
        throw resolution_error("cutoff: box too small for requested delta at grid resolution");

    // Per-axis profiles: base ramps smoothed by iterated binomial filtering
    // (response cos^{2r}(theta/2), an exact zero at the grid Nyquist), so the
    // sampled profile has almost no near-Nyquist content while staying
    // exactly 0 outside the box and exactly 1 on the plateau. Full-period
    // axes get no ramp.
    std::vector<std::vector<double>> prof(d);
    for (int ax = 0; ax < d; ++ax) {
        const int n = grid.n[ax];
        if (box.full_axis(ax)) {
            prof[ax].assign(n, 1.0);
            continue;
        }
        const double dx = grid.dx(ax);
        const int rk = std::clamp(static_cast<int>(std::floor(w / (4.0 * dx))), 0, 8);
        const double wb = w - 2.0 * rk * dx;
        std::vector<double> base(n);
        for (int i = 0; i < n; ++i) {
            const double x = grid.coord(ax, i);
            double v = 0.0;
            if (x > box.lo[ax] && x < box.hi[ax])
                v = base_ramp((x - box.lo[ax] - rk * dx) / wb) *
                    base_ramp((box.hi[ax] - x - rk * dx) / wb);
            base[i] = v;
        }
        std::vector<double> cur = base, next(n);
        for (int pass = 0; pass < rk; ++pass) {
            for (int i = 0; i < n; ++i)
                next[i] = 0.25 * cur[(i + n - 1) % n] + 0.5 * cur[i] +
                          0.25 * cur[(i + 1) % n];
            cur.swap(next);
        }
        prof[ax].resize(n);
        for (int i = 0; i < n; ++i) {
            // Convex averaging keeps [0, 1]; snap the flats back to exact.
            double acc = std::clamp(cur[i], 0.0, 1.0);
            if (acc > 1.0 - 1e-13) acc = 1.0;
            if (acc < 1e-300) acc = 0.0;
            prof[ax][i] = acc;
        }
    }
    ScalarField phi(grid);
    std::vector<int> ix(d);
    for (std::int64_t p = 0; p < grid.total(); ++p) {
        unflatten(grid, p, ix.data());
        double v = 1.0;
        for (int ax = 0; ax < d; ++ax) v *= prof[ax][ix[ax]];
        phi[p] = v;
    }
    return phi;
}

}  // namespace pwforge
