#include "pwforge/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <mutex>

namespace pwforge {

namespace {

std::mutex& plan_mutex() {
    static std::mutex m;
    return m;
}

std::int64_t spectrum_size(const TorusGrid& g) {
    std::int64_t t = 1;
    for (int i = 0; i < g.dim() - 1; ++i) t *= g.n[i];
    return t * (g.n[g.dim() - 1] / 2 + 1);
}

}  // namespace

Spectrum::Spectrum(const TorusGrid& g) : grid(g), c(spectrum_size(g)) {}

Spectrum rfft(const ScalarField& f) {
    Spectrum s(f.grid);
    std::vector<double> in(f.a);
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(plan_mutex());
        plan = fftw_plan_dft_r2c(f.grid.dim(), f.grid.n.data(), in.data(),
                                 reinterpret_cast<fftw_complex*>(s.c.data()),
                                 FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard<std::mutex> lock(plan_mutex());
        fftw_destroy_plan(plan);
    }
    const double scale = 1.0 / static_cast<double>(f.grid.total());
    for (auto& z : s.c) z *= scale;
    return s;
}

ScalarField irfft(const Spectrum& s) {
    ScalarField f(s.grid);
    std::vector<std::complex<double>> in(s.c);  // c2r destroys its input
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(plan_mutex());
        plan = fftw_plan_dft_c2r(s.grid.dim(), s.grid.n.data(),
                                 reinterpret_cast<fftw_complex*>(in.data()),
                                 f.a.data(), FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard<std::mutex> lock(plan_mutex());
        fftw_destroy_plan(plan);
    }
    return f;
}

namespace {

ScalarField apply_multiplier(const ScalarField& f,
                             const std::function<std::complex<double>(const int*)>& mult) {
    Spectrum s = rfft(f);
    for_each_mode(f.grid, [&](std::int64_t idx, const int* k, double) {
        s.c[idx] *= mult(k);
    });
    return irfft(s);
}

double sq(double x) { return x * x; }

double kk(const int* k, int d) {
    double s = 0.0;
    for (int i = 0; i < d; ++i) s += sq(k[i]);
    return s;
}

}  // namespace

VectorField grad(const ScalarField& f) {
    const int d = f.grid.dim();
    VectorField out(f.grid, d);
    Spectrum s = rfft(f);
    Spectrum tmp(f.grid);
    for (int ax = 0; ax < d; ++ax) {
        for_each_mode(f.grid, [&](std::int64_t idx, const int* k, double) {
            tmp.c[idx] = std::complex<double>(0.0, k[ax]) * s.c[idx];
        });
        out.comp[ax] = irfft(tmp);
    }
    return out;
}

ScalarField div(const VectorField& v) {
    const int d = v.grid.dim();
    Spectrum acc(v.grid);
    for (int ax = 0; ax < d; ++ax) {
        Spectrum s = rfft(v.comp[ax]);
        for_each_mode(v.grid, [&](std::int64_t idx, const int* k, double) {
            acc.c[idx] += std::complex<double>(0.0, k[ax]) * s.c[idx];
        });
    }
    return irfft(acc);
}

VectorField div(const MatrixField& M) {
    const int d = M.grid.dim();
    VectorField out(M.grid, d);
    for (int i = 0; i < d; ++i) {
        Spectrum acc(M.grid);
        for (int j = 0; j < d; ++j) {
            Spectrum s = rfft(M.at(i, j));
            for_each_mode(M.grid, [&](std::int64_t idx, const int* k, double) {
                acc.c[idx] += std::complex<double>(0.0, k[j]) * s.c[idx];
            });
        }
        out.comp[i] = irfft(acc);
    }
    return out;
}

MatrixField jacobian(const VectorField& v) {
    const int d = v.grid.dim();
    MatrixField out(v.grid);
    for (int i = 0; i < d; ++i) {
        Spectrum s = rfft(v.comp[i]);
        Spectrum tmp(v.grid);
        for (int j = 0; j < d; ++j) {
            for_each_mode(v.grid, [&](std::int64_t idx, const int* k, double) {
                tmp.c[idx] = std::complex<double>(0.0, k[j]) * s.c[idx];
            });
            out.at(i, j) = irfft(tmp);
        }
    }
    return out;
}

ScalarField laplacian(const ScalarField& f) {
    const int d = f.grid.dim();
    return apply_multiplier(f, [d](const int* k) {
        return std::complex<double>(-kk(k, d), 0.0);
    });
}

VectorField laplacian(const VectorField& v) {
    VectorField out(v.grid, v.ncomp());
    for (int c = 0; c < v.ncomp(); ++c) out.comp[c] = laplacian(v.comp[c]);
    return out;
}

ScalarField inv_laplacian(const ScalarField& f) {
    const double m = mean(f);
    if (std::abs(m) > 1e-10 * std::max(supnorm(f), 1e-300))
        throw precondition_error("inv_laplacian: input must have zero mean");
    const int d = f.grid.dim();
    Spectrum s = rfft(f);
    for_each_mode(f.grid, [&](std::int64_t idx, const int* k, double) {
        const double k2 = kk(k, d);
        s.c[idx] = (k2 == 0.0) ? 0.0 : s.c[idx] / (-k2);
    });
    return irfft(s);
}

VectorField inv_laplacian(const VectorField& f) {
    VectorField out(f.grid, f.ncomp());
    for (int c = 0; c < f.ncomp(); ++c) out.comp[c] = inv_laplacian(f.comp[c]);
    return out;
}

VectorField leray_correct(const VectorField& v) {
    const int d = v.grid.dim();
    // Per mode: v''_hat = -k (k . v_hat) / |k|^2.
    std::vector<Spectrum> vh;
    vh.reserve(d);
    for (int ax = 0; ax < d; ++ax) vh.push_back(rfft(v.comp[ax]));
    VectorField out(v.grid, d);
    Spectrum tmp(v.grid);
    for (int ax = 0; ax < d; ++ax) {
        for_each_mode(v.grid, [&](std::int64_t idx, const int* k, double) {
            const double k2 = kk(k, d);
            if (k2 == 0.0) {
                tmp.c[idx] = 0.0;
                return;
            }
            std::complex<double> kdotv(0.0, 0.0);
            for (int j = 0; j < d; ++j) kdotv += double(k[j]) * vh[j].c[idx];
            tmp.c[idx] = -double(k[ax]) * kdotv / k2;
        });
        out.comp[ax] = irfft(tmp);
    }
    return out;
}

void antidiv_mode_solve(int d, const int* k, const std::complex<double>* f_hat,
                        std::complex<double>* U_out) {
    const double k2 = kk(k, d);
    // g = -i f_hat so that i U k = f_hat becomes U k = g.
    std::complex<double> g[8];
    for (int i = 0; i < d; ++i) g[i] = std::complex<double>(0.0, -1.0) * f_hat[i];
    std::complex<double> kg(0.0, 0.0);
    for (int i = 0; i < d; ++i) kg += double(k[i]) * g[i];
    const std::complex<double> mu_k = double(d) * kg / ((d - 1) * k2);
    const double beta = (d - 2) / (2.0 * d);
    std::complex<double> mu[8];
    for (int i = 0; i < d; ++i)
        mu[i] = (2.0 / k2) * (g[i] - beta * mu_k * double(k[i]));
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            U_out[i * d + j] = 0.5 * (mu[i] * double(k[j]) + double(k[i]) * mu[j]);
    const std::complex<double> nu = mu_k / double(d);
    for (int i = 0; i < d; ++i) U_out[i * d + i] -= nu;
    // Exact zero trace: the last diagonal entry balances the others.
    std::complex<double> tr(0.0, 0.0);
    for (int i = 0; i + 1 < d; ++i) tr += U_out[i * d + i];
    U_out[(d - 1) * d + (d - 1)] = -tr;
}

MatrixField anti_divergence(const VectorField& f) {
    const int d = f.grid.dim();
    if (d > 8) throw precondition_error("anti_divergence: d <= 8 supported");
    for (int c = 0; c < d; ++c) {
        const double m = mean(f.comp[c]);
        if (std::abs(m) > 1e-10 * std::max(supnorm(f.comp[c]), 1e-300))
            throw precondition_error(
                "anti_divergence: mean obstruction: no periodic anti-divergence exists");
    }
    std::vector<Spectrum> fh;
    fh.reserve(d);
    for (int c = 0; c < d; ++c) fh.push_back(rfft(f.comp[c]));

    std::vector<Spectrum> Uh(static_cast<size_t>(d) * d, Spectrum(f.grid));
    std::complex<double> fmode[8], Umode[64];
    for_each_mode(f.grid, [&](std::int64_t idx, const int* k, double) {
        if (kk(k, d) == 0.0) {
            for (int c = 0; c < d * d; ++c) Uh[c].c[idx] = 0.0;
            return;
        }
        for (int c = 0; c < d; ++c) fmode[c] = fh[c].c[idx];
        antidiv_mode_solve(d, k, fmode, Umode);
        for (int c = 0; c < d * d; ++c) Uh[c].c[idx] = Umode[c];
    });

    MatrixField out(f.grid);
    // Transform the upper triangle and the first d-1 diagonal entries; mirror
    // and balance pointwise so symmetry and zero trace are exact.
    for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) {
            if (i == d - 1 && j == d - 1) continue;
            out.at(i, j) = irfft(Uh[i * d + j]);
            if (i != j) out.at(j, i) = out.at(i, j);
        }
    ScalarField last(f.grid);
    for (std::int64_t p = 0; p < f.grid.total(); ++p) {
        double tr = 0.0;
        for (int i = 0; i + 1 < d; ++i) tr += out.at(i, i)[p];
        last[p] = -tr;
    }
    out.at(d - 1, d - 1) = std::move(last);
    return out;
}

double mean(const ScalarField& f) {
    double s = 0.0;
    for (double x : f.a) s += x;
    return s / static_cast<double>(f.grid.total());
}

double l2norm(const ScalarField& f) {
    double s = 0.0;
    for (double x : f.a) s += x * x;
    return std::sqrt(s / static_cast<double>(f.grid.total()));
}

double l2norm(const VectorField& v) {
    double s = 0.0;
    for (const auto& c : v.comp) s += sq(l2norm(c));
    return std::sqrt(s);
}

double l2norm(const MatrixField& M) {
    double s = 0.0;
    for (const auto& c : M.comp) s += sq(l2norm(c));
    return std::sqrt(s);
}

double supnorm(const ScalarField& f) {
    double s = 0.0;
    for (double x : f.a) s = std::max(s, std::abs(x));
    return s;
}

double supnorm(const VectorField& v) {
    double s = 0.0;
    const std::int64_t n = v.grid.total();
    for (std::int64_t p = 0; p < n; ++p) {
        double q = 0.0;
        for (const auto& c : v.comp) q += sq(c[p]);
        s = std::max(s, q);
    }
    return std::sqrt(s);
}

double l2dist(const VectorField& a, const VectorField& b) {
    double s = 0.0;
    for (int c = 0; c < a.ncomp(); ++c) {
        for (std::int64_t p = 0; p < a.grid.total(); ++p)
            s += sq(a.comp[c][p] - b.comp[c][p]);
    }
    return std::sqrt(s / static_cast<double>(a.grid.total()));
}

double hminus1_distance(const VectorField& v, const VectorField& v0) {
    if (v.grid != v0.grid)
        throw precondition_error("hminus1_distance: grids differ");
    const int d = v.grid.dim();
    double acc = 0.0;
    for (int c = 0; c < v.ncomp(); ++c) {
        ScalarField diff = v.comp[c];
        diff -= v0.comp[c];
        Spectrum s = rfft(diff);
        for_each_mode(v.grid, [&](std::int64_t idx, const int* k, double w) {
            acc += w * std::norm(s.c[idx]) / (1.0 + kk(k, d));
        });
    }
    return std::sqrt(acc);
}

}  // namespace pwforge
