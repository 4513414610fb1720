#pragma once

#include <complex>
#include <vector>

#include "pwforge/grid.hpp"

namespace pwforge {

// Fourier-multiplier calculus on the 2pi-periodic torus. Coefficients follow
// the convention f(x) = sum_k c_k e^{i k.x}, stored as the real-transform
// half spectrum (last axis 0..n/2). All norms and integrals reported by this
// module are per unit volume: l2norm(f) = sqrt(mean f^2). Operations never
// mutate their inputs and are safe to call concurrently.

/// Half spectrum of a real scalar field.
struct Spectrum {
    TorusGrid grid;                       // physical grid
    std::vector<std::complex<double>> c;  // size: prod n_i with last -> n/2+1

    Spectrum() = default;
    explicit Spectrum(const TorusGrid& g);
    std::int64_t size() const { return static_cast<std::int64_t>(c.size()); }
};

Spectrum rfft(const ScalarField& f);
ScalarField irfft(const Spectrum& s);

/// Calls f(flat_index, k, weight) for every stored mode, where k is the
/// integer wavevector (fftfreq convention) and weight the Hermitian
/// multiplicity (2 for modes whose conjugate is not stored, else 1).
template <class F>
void for_each_mode(const TorusGrid& g, F&& f) {
    const int d = g.dim();
    std::vector<int> m(d, 0);
    std::vector<int> k(d, 0);
    const int nlast = g.n[d - 1];
    const int clast = nlast / 2 + 1;
    std::int64_t ctotal = 1;
    for (int i = 0; i < d - 1; ++i) ctotal *= g.n[i];
    ctotal *= clast;
    for (std::int64_t idx = 0; idx < ctotal; ++idx) {
        std::int64_t rem = idx;
        for (int ax = d - 1; ax >= 0; --ax) {
            const int nax = (ax == d - 1) ? clast : g.n[ax];
            m[ax] = static_cast<int>(rem % nax);
            rem /= nax;
        }
        for (int ax = 0; ax < d; ++ax)
            k[ax] = (ax < d - 1 && m[ax] > g.n[ax] / 2) ? m[ax] - g.n[ax] : m[ax];
        const double w = (m[d - 1] == 0 || m[d - 1] == nlast / 2) ? 1.0 : 2.0;
        f(idx, k.data(), w);
    }
}

// ---------------------------------------------------------------------------
// Derivatives
// ---------------------------------------------------------------------------

VectorField grad(const ScalarField& f);
ScalarField div(const VectorField& v);
VectorField div(const MatrixField& M);  // out_i = sum_j d_j M_ij
/// Jacobian J(i, j) = d_j v_i.
MatrixField jacobian(const VectorField& v);
ScalarField laplacian(const ScalarField& f);
VectorField laplacian(const VectorField& v);

/// Zero-mean solution of laplacian(u) = f. Requires |mean f| <= 1e-10 sup|f|
/// per component.
ScalarField inv_laplacian(const ScalarField& f);
VectorField inv_laplacian(const VectorField& f);

/// Gradient-part removal: returns v'' = -grad inv_laplacian div v', so that
/// v' + v'' is divergence-free and v'' has zero mean.
VectorField leray_correct(const VectorField& v);

/// Anti-divergence: the symmetric trace-free matrix field of minimal
/// Frobenius norm per Fourier mode with div R[f] = f. Linear; output has
/// zero mean and is exactly symmetric trace-free pointwise. Requires f to
/// have zero mean per component ("mean obstruction" otherwise).
MatrixField anti_divergence(const VectorField& f);

/// Closed-form per-mode solve of i U k = g over symmetric trace-free complex
/// matrices (minimal Frobenius norm), exposed for the fused wave pipeline.
/// g and U are length-d / d*d scratch arrays; k is the integer wavevector.
void antidiv_mode_solve(int d, const int* k, const std::complex<double>* f_hat,
                        std::complex<double>* U_out);

// ---------------------------------------------------------------------------
// Reductions
// ---------------------------------------------------------------------------

double mean(const ScalarField& f);
double l2norm(const ScalarField& f);
double l2norm(const VectorField& v);
double l2norm(const MatrixField& M);
double supnorm(const ScalarField& f);
double supnorm(const VectorField& v);
double l2dist(const VectorField& a, const VectorField& b);

/// H^{-1} distance: sqrt(sum_k |v_hat - v0_hat|^2 / (1 + |k|^2)), the mean
/// mode included with weight 1.
double hminus1_distance(const VectorField& v, const VectorField& v0);

}  // namespace pwforge
