#pragma once

#include <complex>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "pwforge/errors.hpp"

namespace pwforge {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Default tolerances for the pointwise state algebra.
inline constexpr double kSymTol = 1e-12;      // symmetry / trace defect of U
inline constexpr double kMemberTol = 1e-9;    // set-membership tests

/// One point w = (v, U) of the state space R^d x S0(d), optionally with a
/// pressure-like scalar q. U is symmetric trace-free ("velocity squared"
/// part); v is the velocity part.
struct StatePoint {
    Vec v;
    Mat U;
    std::optional<double> q;

    StatePoint() = default;
    StatePoint(Vec v_, Mat U_, std::optional<double> q_ = std::nullopt);

    int dim() const { return static_cast<int>(v.size()); }

    /// Euclidean state norm sqrt(|v|^2 + |U|_F^2), used for all distances.
    double norm() const;

    /// Throws precondition_error if U is not symmetric trace-free within
    /// tolerance or d < 2.
    void validate(double tol = kSymTol) const;

    static StatePoint zero(int d);

    StatePoint operator+(const StatePoint& o) const;
    StatePoint operator-(const StatePoint& o) const;
    StatePoint operator*(double s) const;
    StatePoint& operator+=(const StatePoint& o);
};

/// Constant d x d source matrix B of the forcing term B v.
struct SourceMatrix {
    Mat B;

    explicit SourceMatrix(Mat B_);
    static SourceMatrix zero(int d) { return SourceMatrix(Mat::Zero(d, d)); }
    int dim() const { return static_cast<int>(B.rows()); }
};

/// d = 2 complex coordinates: z = v0 + i v1, zeta = U00 + i U01.
struct ComplexState {
    std::complex<double> z;
    std::complex<double> zeta;
};

ComplexState to_complex(const StatePoint& w);
StatePoint from_complex(const ComplexState& c,
                        std::optional<double> q = std::nullopt);

/// Rotation R_theta (z, zeta) -> (z e^{i theta}, zeta e^{2 i theta}), d = 2.
StatePoint rotate_state(const StatePoint& w, double theta);

// ---------------------------------------------------------------------------
// Pointwise operations
// ---------------------------------------------------------------------------

/// Projection of an arbitrary d x d matrix onto symmetric trace-free
/// matrices: (M + M^T)/2 - (tr M / d) I. Linear and idempotent.
Mat sym0_project(const Mat& M);

/// Lift of a velocity onto the constraint manifold at level r:
/// U = v (x) v - (r/d) I. Requires r > 0.
StatePoint lift_to_K(const Vec& v, double r);

/// Membership in K_r: | |v|^2 - r | <= tol and |U - (v(x)v - (r/d)I)|_F <= tol.
bool in_K(const StatePoint& w, double r, double tol = kMemberTol);

/// Signed interior margin of the convex hull K_r^co, characterized by
/// v(x)v - U <= (r/d) I. Returns r/d - lambda_max(v(x)v - U):
/// positive in the interior, zero on the boundary, negative outside.
double hull_margin(const StatePoint& w, double r);

/// Energy deficit r - |v|^2, the distance-to-K_r surrogate. Nonnegative on
/// K_r^co and zero exactly on K_r.
double energy_deficit(const StatePoint& w, double r);

/// A wave-cone direction certificate: unit xi with U xi + q_bar xi = 0 and
/// v . xi = 0.
struct ConeDirection {
    Vec xi;
    double q_bar = 0.0;
};

/// Tests membership of w in the wave cone. Requires v != 0 (degenerate
/// velocity directions are rejected). For d = 2 uses the complex-coordinate
/// sign test Im(z^2 conj(zeta)) = 0 and returns xi = v_perp / |v|; for
/// d >= 3 searches the eigenvectors of U, ties resolved by minimizing
/// |v . xi|.
std::optional<ConeDirection> in_wave_cone(const StatePoint& w,
                                          double tol = kMemberTol);

/// Eigen-decomposition route of the cone test, valid for every d >= 2.
/// Exposed so the two d = 2 formulations can be cross-checked.
std::optional<ConeDirection> wave_cone_by_eigen(const StatePoint& w,
                                                double tol = kMemberTol);

/// Gauge function of the d = 2 base relaxation set on the slice Im zeta = 0:
/// f_r(a + ib, c) = sqrt(r)|a|/(r/2 + c) + sqrt(r)|b|/(r/2 - c).
/// Requires |c| < r/2.
double f_r(std::complex<double> z, double c, double r);

/// Sampling parameters for the d = 2 lamination hull search. The defaults
/// certify typical interior states in a few milliseconds; results are
/// monotone in depth, n_dirs and n_samples (prefixes of fixed sequences).
struct HullParams {
    int depth = 2;
    int n_dirs = 64;
    int n_samples = 32;
    double interior_margin = 1e-9;  // clearance from set boundaries (r = 1 units)
};

/// Membership in the depth-limited lamination convex hull of the d = 2 base
/// set (d = 2 only; throws otherwise). depth = 0 tests the base set itself.
bool in_lamination_hull(const StatePoint& w, double r, int depth, int n_dirs,
                        int n_samples);

/// Relaxed-set membership: interior of K_r^co for d >= 3, lamination hull
/// for d = 2.
bool in_relaxed(const StatePoint& w, double r, const HullParams& hp = {});

}  // namespace pwforge
