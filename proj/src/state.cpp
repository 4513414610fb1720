#include "pwforge/state.hpp"

#include <cmath>

#include "pwforge/hull2d.hpp"

namespace pwforge {

StatePoint::StatePoint(Vec v_, Mat U_, std::optional<double> q_)
    : v(std::move(v_)), U(std::move(U_)), q(q_) {}

double StatePoint::norm() const {
    return std::sqrt(v.squaredNorm() + U.squaredNorm());
}

void StatePoint::validate(double tol) const {
    if (dim() < 2) throw precondition_error("StatePoint: d >= 2 required");
    if (U.rows() != dim() || U.cols() != dim())
        throw precondition_error("StatePoint: U must be d x d");
    if ((U - U.transpose()).cwiseAbs().maxCoeff() > tol)
        throw precondition_error("StatePoint: U not symmetric within tolerance");
    if (std::abs(U.trace()) > tol)
        throw precondition_error("StatePoint: U not trace-free within tolerance");
}

StatePoint StatePoint::zero(int d) {
    return StatePoint(Vec::Zero(d), Mat::Zero(d, d));
}

StatePoint StatePoint::operator+(const StatePoint& o) const {
    return StatePoint(v + o.v, U + o.U, q);
}
StatePoint StatePoint::operator-(const StatePoint& o) const {
    return StatePoint(v - o.v, U - o.U, q);
}
StatePoint StatePoint::operator*(double s) const {
    return StatePoint(v * s, U * s, q);
}
StatePoint& StatePoint::operator+=(const StatePoint& o) {
    v += o.v;
    U += o.U;
    return *this;
}

SourceMatrix::SourceMatrix(Mat B_) : B(std::move(B_)) {
    if (B.rows() != B.cols() || B.rows() < 2)
        throw precondition_error("SourceMatrix: B must be d x d, d >= 2");
    if (!B.allFinite()) throw precondition_error("SourceMatrix: nonfinite entries");
}

ComplexState to_complex(const StatePoint& w) {
    if (w.dim() != 2) throw precondition_error("to_complex: d = 2 only");
    return ComplexState{{w.v(0), w.v(1)}, {w.U(0, 0), w.U(0, 1)}};
}

StatePoint from_complex(const ComplexState& c, std::optional<double> q) {
    Vec v(2);
    v << c.z.real(), c.z.imag();
    Mat U(2, 2);
    U << c.zeta.real(), c.zeta.imag(), c.zeta.imag(), -c.zeta.real();
    return StatePoint(std::move(v), std::move(U), q);
}

StatePoint rotate_state(const StatePoint& w, double theta) {
    ComplexState c = to_complex(w);
    c.z *= std::polar(1.0, theta);
    c.zeta *= std::polar(1.0, 2.0 * theta);
    return from_complex(c, w.q);
}

Mat sym0_project(const Mat& M) {
    const int d = static_cast<int>(M.rows());
    Mat S = 0.5 * (M + M.transpose());
    S -= (S.trace() / d) * Mat::Identity(d, d);
    return S;
}

StatePoint lift_to_K(const Vec& v, double r) {
    if (!(r > 0.0)) throw precondition_error("lift_to_K: r > 0 required");
    const int d = static_cast<int>(v.size());
    Mat U = v * v.transpose();
    U -= (r / d) * Mat::Identity(d, d);
    return StatePoint(v, std::move(U));
}

bool in_K(const StatePoint& w, double r, double tol) {
    if (!(r > 0.0)) throw precondition_error("in_K: r > 0 required");
    if (std::abs(w.v.squaredNorm() - r) > tol) return false;
    const StatePoint lifted = lift_to_K(w.v, r);
    return (w.U - lifted.U).norm() <= tol;
}

double hull_margin(const StatePoint& w, double r) {
    if (!(r > 0.0)) throw precondition_error("hull_margin: r > 0 required");
    const int d = w.dim();
    Mat A = w.v * w.v.transpose() - w.U;
    Eigen::SelfAdjointEigenSolver<Mat> es(A, Eigen::EigenvaluesOnly);
    return r / d - es.eigenvalues().maxCoeff();
}

double energy_deficit(const StatePoint& w, double r) {
    return r - w.v.squaredNorm();
}

std::optional<ConeDirection> wave_cone_by_eigen(const StatePoint& w, double tol) {
    const double vnorm = w.v.norm();
    if (vnorm == 0.0) throw precondition_error("wave cone: v != 0 required");
    Eigen::SelfAdjointEigenSolver<Mat> es(w.U);
    int best = -1;
    double best_dot = std::numeric_limits<double>::infinity();
    for (int i = 0; i < w.dim(); ++i) {
        const double dot = std::abs(w.v.dot(es.eigenvectors().col(i)));
        if (dot < best_dot) {
            best_dot = dot;
            best = i;
        }
    }
    if (best_dot > tol * std::max(1.0, vnorm)) return std::nullopt;
    ConeDirection c;
    c.xi = es.eigenvectors().col(best);
    c.q_bar = -es.eigenvalues()(best);
    return c;
}

std::optional<ConeDirection> in_wave_cone(const StatePoint& w, double tol) {
    const double vnorm = w.v.norm();
    if (vnorm == 0.0) throw precondition_error("wave cone: v != 0 required");
    if (w.dim() != 2) return wave_cone_by_eigen(w, tol);
    // d = 2: in the cone iff Im(z^2 conj(zeta)) = 0, and then v_perp is an
    // eigenvector of U.
    const ComplexState c = to_complex(w);
    const double s = std::imag(c.z * c.z * std::conj(c.zeta));
    const double scale = std::max(std::norm(c.z) * std::abs(c.zeta), 1e-300);
    if (std::abs(s) > tol * std::max(1.0, scale)) return std::nullopt;
    ConeDirection out;
    out.xi = Vec(2);
    out.xi << -w.v(1) / vnorm, w.v(0) / vnorm;
    out.q_bar = -out.xi.dot(w.U * out.xi);
    return out;
}

double f_r(std::complex<double> z, double c, double r) {
    if (!(r > 0.0)) throw precondition_error("f_r: r > 0 required");
    if (!(std::abs(c) < r / 2))
        throw precondition_error("f_r: |c| < r/2 required");
    const double sr = std::sqrt(r);
    return sr * std::abs(z.real()) / (r / 2 + c) +
           sr * std::abs(z.imag()) / (r / 2 - c);
}

bool in_lamination_hull(const StatePoint& w, double r, int depth, int n_dirs,
                        int n_samples) {
    if (w.dim() != 2)
        throw precondition_error("in_lamination_hull: d = 2 only");
    if (depth < 0) throw precondition_error("in_lamination_hull: depth >= 0");
    HullParams hp;
    hp.depth = depth;
    hp.n_dirs = n_dirs;
    hp.n_samples = n_samples;
    if (depth == 0) return in_base_set_2d(w, r, hp.interior_margin);
    return hull_witness(w, r, hp).has_value();
}

bool in_relaxed(const StatePoint& w, double r, const HullParams& hp) {
    if (!(r > 0.0)) throw precondition_error("in_relaxed: r > 0 required");
    if (w.dim() >= 3) return hull_margin(w, r) > 0.0;
    return in_lamination_hull(w, r, hp.depth, hp.n_dirs, hp.n_samples);
}

}  // namespace pwforge
