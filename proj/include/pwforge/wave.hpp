#pragma once

#include "pwforge/cutoff.hpp"
#include "pwforge/grid.hpp"
#include "pwforge/profiles.hpp"
#include "pwforge/segment.hpp"
#include "pwforge/spectral.hpp"

namespace pwforge {

/// Recipe for one localized plane wave: oscillate between the states w1 and
/// w2 (their difference a wave-cone direction with wave vector kappa/|kappa|
/// and pressure coefficient q_bar) inside `region`, with convex split
/// (mu1, mu2) and mollification parameter delta. kappa is an integer vector
/// so the oscillation closes up on the torus; the effective frequency is
/// |kappa| oscillations per torus period.
struct WaveSpec {
    StatePoint w1, w2;
    double mu1 = 0.5, mu2 = 0.5;
    Eigen::VectorXi kappa;
    double q_bar = 0.0;
    Box region;
    double delta = 1.0 / 16;
    Mat B;
    double phase = 0.0;  // profile offset in periods (free parameter)

    static WaveSpec from_segment(const AdmissibleSegment& seg, Box region,
                                 double delta, Mat B);

    StatePoint center() const { return w1 * mu1 + w2 * mu2; }
    StatePoint bar() const { return w2 - w1; }
    double lambda() const { return kappa.cast<double>().norm(); }
    Vec xi() const { return kappa.cast<double>().normalized(); }

    /// Checks the cone conditions of w2 - w1 against kappa and the grid
    /// resolution rule (>= 8 nodes per oscillation).
    void validate(const TorusGrid& grid, double tol = 1e-8) const;
};

struct WaveDiagnostics {
    double lambda = 0.0;
    double sup_segment_dist = 0.0;  // sup over region of dist(center + w, [w1, w2])
    double sup_h0_error = 0.0;      // sup |w - bar h0(kappa.x/2pi) phi|
    double residual_div_v = 0.0;
    double residual_relaxed = 0.0;
    double mean_v = 0.0, mean_U = 0.0;
    double primary_mass_outside = 0.0;  // L2-mass fraction of the primary part off-region
    double corr_tail_sup = 0.0;         // sup of the correction parts off-region
    double cutoff_delta_effective = 0.0;
};

/// A built localized wave. v is exactly divergence-free and
/// div U + grad q = B v holds at spectral accuracy; U is exactly symmetric
/// trace-free pointwise. primary_profile is the scalar D(x) with primary
/// parts v' = vbar D, U' = Ubar D, q' = qbar D.
struct LocalizedWave {
    VectorField v;
    MatrixField U;
    ScalarField q;
    ScalarField primary_profile;
    WaveDiagnostics diag;
};

struct WaveBuildOptions {
    int profile_resolution = 8192;
    double min_ramp_cells = 2.0;
    /// Cutoff ramps need about one oscillation period of width or the
    /// high-order derivative terms of the construction dominate. 0 disables
    /// the lambda-linked floor (callers then control ramp_width).
    double ramp_periods = 1.3;
    /// Explicit ramp width (> 0 overrides the per-lambda policy); fixing it
    /// keeps phi identical across frequency-doubling comparisons.
    double ramp_width = 0.0;
    /// Offsets the profile by half a node step so the two-level jumps fall
    /// between grid nodes instead of onto them.
    bool align_phase_to_grid = true;
    bool keep_primary_profile = true;
};

LocalizedWave build_localized_wave(const WaveSpec& spec, const TorusGrid& grid,
                                   const WaveBuildOptions& opt = {});

/// Volumes of the two near-endpoint regions
/// O_i = {x in region : |center + w(x) - w_i| < min(eps/2, |w2 - w1|/4)}
/// and the sup of the segment distance over the region.
struct RegionStats {
    double vol1 = 0.0, vol2 = 0.0;
    double sup_dist = 0.0;
    double threshold = 0.0;
};
RegionStats region_stats(const LocalizedWave& wave, const WaveSpec& spec,
                         double eps);

struct TileOptions {
    double cube_side = M_PI;
    int periods_per_cell = 8;
    int grid_n = 0;  // 0: chosen from k so cells keep >= 8 nodes/oscillation
    double delta = 1.0 / 16;
    Mat B;  // empty: zero source
};

/// Lemma-style tiling: one localized wave oscillating through +-bar on a
/// 2^-k-side cell, replicated over all 2^{kd} cells of the cube. Pairings
/// are |cube-mean(component * g)| maxima against five fixed low-mode test
/// functions, the operational weak-convergence measure.
struct TileResult {
    VectorField v;
    MatrixField U;
    double epsilon = 0.0;    // 2^{-kd} / k
    double mean_norm = 0.0;  // norm of the mean of (v, U)
    double mass_on_cube = 0.0;
    double sup_dist = 0.0;  // sup over the cube of dist to [-bar, bar]
    double pairing_max = 0.0;
    std::vector<double> pairings;
};
TileResult tile_unit_cube(const StatePoint& bar, int k,
                          const TileOptions& opt = {});

}  // namespace pwforge
