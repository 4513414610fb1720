#pragma once

#include <cstdint>
#include <vector>

#include "pwforge/hull2d.hpp"
#include "pwforge/state.hpp"

namespace pwforge {

/// Convex decomposition of an interior state over points of K_r.
struct CaratheodoryDecomposition {
    std::vector<StatePoint> points;  // each on K_r
    std::vector<double> weights;     // positive, summing to 1
    double reconstruction_error = 0.0;

    StatePoint combine() const;
};

struct SegmentConfig {
    int sphere_resolution = 96;
    std::uint64_t rng_seed = 0;
    int max_resolution_doublings = 4;
    double cone_tol = 1e-9;
    int bisect_iters = 32;
    HullParams hull;        // d = 2 certification parameters
    int lattice_dirs = 40;  // d = 2: lattice directions scanned per search
};

/// A wave-cone line segment [center - direction, center + direction] inside
/// the relaxed set. direction is the half-direction w_bar; wave_vector is the
/// unit xi with U_bar xi + q_bar xi = 0 and v_bar . xi = 0. kappa, when
/// nonempty, is an integer wave-count vector parallel to xi (so plane waves
/// along xi close up periodically).
struct AdmissibleSegment {
    StatePoint center;
    StatePoint direction;
    Vec wave_vector;
    double q_bar = 0.0;
    double margin = 0.0;          // hull_margin of the center
    double measured_ratio = 0.0;  // |v_bar| / (r - |v|^2)
    Eigen::VectorXi kappa;

    StatePoint endpoint(int sign) const { return center + direction * sign; }
};

/// Throws numeric_error if the segment violates its own invariants
/// (unit xi, cone residuals <= tol, endpoint margins >= half center margin).
void validate_segment(const AdmissibleSegment& seg, double r,
                      double tol = 1e-9);

/// Decomposes an interior state of K_r^co as a positive convex combination of
/// at most N + 1 points of K_r, N = d(d+3)/2 - 1. Candidate velocities are a
/// quasi-uniform, seed-jittered mesh of the sphere |v|^2 = r; the weights are
/// found by linear feasibility and reduced by Caratheodory pivoting. Throws
/// infeasible_error("resolution too coarse") when the mesh cannot reproduce w.
CaratheodoryDecomposition decompose(const StatePoint& w, double r,
                                    int sphere_resolution,
                                    std::uint64_t rng_seed);

/// A unit vector orthogonal to span{a, b} (d >= 3). If a and b are parallel,
/// any unit vector orthogonal to a is returned.
Vec wave_vector_d3(const Vec& a, const Vec& b);

/// Admissible segment through an interior state, d >= 3 construction:
/// Caratheodory decomposition, largest-travel direction selection, then
/// bisection so both endpoint margins stay >= half the center margin.
AdmissibleSegment admissible_segment(const StatePoint& w, double r,
                                     const SegmentConfig& cfg = {});

/// Admissible segment for d = 2, searched over sampled wave-cone directions
/// and certified against the lamination hull. If target_lambda > 0 the scan
/// is restricted to directions of integer wave vectors with length near
/// target_lambda, and the result carries the matching kappa. Throws
/// infeasible_error("hull too thin here") when no direction admits a segment.
AdmissibleSegment admissible_segment_2d(const StatePoint& w, double r,
                                        const SegmentConfig& cfg = {},
                                        int target_lambda = 0);

/// Replaces a segment's wave vector by the best integer direction of length
/// near target_lambda and re-projects the direction onto the cone of the new
/// xi, re-bisecting margins. d >= 3 only (for d = 2 use the lattice-aware
/// search above).
AdmissibleSegment align_segment_to_lattice(const AdmissibleSegment& seg,
                                           double r, int target_lambda,
                                           const SegmentConfig& cfg = {});

/// Nearest cone member for a given unit xi: removes the xi-component of the
/// velocity and corrects the matrix part so xi becomes an exact eigenvector.
/// Returns the projected direction and its q_bar.
std::pair<StatePoint, double> project_direction_to_cone(const StatePoint& dir,
                                                        const Vec& xi);

}  // namespace pwforge
