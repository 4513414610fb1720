#include <doctest.h>

#include <cmath>
#include <random>

#include "pwforge/cutoff.hpp"
#include "pwforge/profiles.hpp"
#include "pwforge/spectral.hpp"

using namespace pwforge;

namespace {

ScalarField sample_fn(const TorusGrid& g, double (*f)(double, double)) {
    ScalarField out(g);
    std::vector<int> ix(g.dim());
    for (std::int64_t p = 0; p < g.total(); ++p) {
        unflatten(g, p, ix.data());
        out[p] = f(g.coord(0, ix[0]), g.dim() > 1 ? g.coord(1, ix[1]) : 0.0);
    }
    return out;
}

// Band-limited random scalar with (optionally) zero mean.
ScalarField random_band(const TorusGrid& g, std::mt19937_64& rng, int kmax,
                        bool zero_mean) {
    std::uniform_int_distribution<int> ki(-kmax, kmax);
    std::uniform_real_distribution<double> ph(0.0, 2 * M_PI);
    std::normal_distribution<double> amp(0.0, 1.0);
    const int d = g.dim();
    ScalarField f(g);
    std::vector<int> ix(d);
    for (int t = 0; t < 8; ++t) {
        std::vector<int> k(d);
        bool zero = true;
        for (int ax = 0; ax < d; ++ax) {
            k[ax] = ki(rng);
            if (k[ax]) zero = false;
        }
        if (zero && zero_mean) k[0] = 1;
        const double a = amp(rng), p0 = ph(rng);
        for (std::int64_t p = 0; p < g.total(); ++p) {
            unflatten(g, p, ix.data());
            double arg = p0;
            for (int ax = 0; ax < d; ++ax) arg += k[ax] * g.coord(ax, ix[ax]);
            f[p] += a * std::cos(arg);
        }
    }
    if (zero_mean) {
        const double m = mean(f);
        for (auto& x : f.a) x -= m;
    }
    return f;
}

}  // namespace

TEST_SUITE("spectral") {

TEST_CASE("derivatives of single modes") {
    const TorusGrid g(2, 32);
    const ScalarField s = sample_fn(g, [](double x, double) { return std::sin(x); });
    const ScalarField c = sample_fn(g, [](double x, double) { return std::cos(x); });

    const VectorField gs = grad(s);
    ScalarField diff = gs.comp[0];
    diff -= c;
    CHECK(supnorm(diff) < 1e-12);
    CHECK(supnorm(gs.comp[1]) < 1e-12);

    ScalarField lap = div(gs);
    lap += s;
    CHECK(supnorm(lap) < 1e-12);

    CHECK(supnorm(laplacian(ScalarField(g))) == 0.0);
    ScalarField cst(g);
    for (auto& x : cst.a) x = 3.25;
    CHECK(supnorm(laplacian(cst)) < 1e-12);
}

TEST_CASE("div of grad equals laplacian on random band-limited fields") {
    std::mt19937_64 rng(3);
    for (int d : {2, 3}) {
        const TorusGrid g(d, 32);
        const ScalarField f = random_band(g, rng, 5, false);
        ScalarField a = div(grad(f));
        const ScalarField b = laplacian(f);
        a -= b;
        CHECK(l2norm(a) < 1e-12 * std::max(1.0, l2norm(b)));
    }
}

TEST_CASE("inv_laplacian") {
    const TorusGrid g(2, 32);
    const ScalarField s = sample_fn(g, [](double x, double) { return -std::sin(x); });
    ScalarField u = inv_laplacian(s);
    const ScalarField expect = sample_fn(g, [](double x, double) { return std::sin(x); });
    ScalarField diff = u;
    diff -= expect;
    CHECK(supnorm(diff) < 1e-12);

    CHECK(supnorm(inv_laplacian(ScalarField(g))) == 0.0);

    const ScalarField c2 = sample_fn(g, [](double, double y) { return std::cos(2 * y); });
    ScalarField u2 = inv_laplacian(c2);
    for (std::int64_t p = 0; p < g.total(); ++p)
        u2[p] += 0.25 * c2[p];
    CHECK(supnorm(u2) < 1e-12);

    ScalarField bad(g);
    for (auto& x : bad.a) x = 1.0;
    CHECK_THROWS_AS(inv_laplacian(bad), precondition_error);
}

TEST_CASE("leray correction") {
    const TorusGrid g(2, 32);
    // A pure gradient is annihilated.
    const VectorField gr = grad(sample_fn(g, [](double x, double) { return std::sin(x); }));
    VectorField corr = leray_correct(gr);
    corr += gr;
    CHECK(supnorm(corr) < 1e-11);

    // An already divergence-free shear is untouched.
    VectorField shear(g, 2);
    shear.comp[0] = sample_fn(g, [](double, double y) { return std::cos(y); });
    CHECK(supnorm(leray_correct(shear)) < 1e-12);

    std::mt19937_64 rng(9);
    VectorField v(g, 2);
    v.comp[0] = random_band(g, rng, 6, false);
    v.comp[1] = random_band(g, rng, 6, false);
    VectorField fixed = v;
    fixed += leray_correct(v);
    CHECK(l2norm(div(fixed)) <= 1e-10 * std::max(1.0, l2norm(v)));
    // The correction has zero mean.
    const VectorField c2 = leray_correct(v);
    for (int ax = 0; ax < 2; ++ax) CHECK(std::abs(mean(c2.comp[ax])) < 1e-13);
}

TEST_CASE("anti-divergence: hand-derived single mode, d = 2") {
    const TorusGrid g(2, 32);
    VectorField f(g, 2);
    f.comp[0] = sample_fn(g, [](double x, double) { return std::cos(x); });
    const MatrixField R = anti_divergence(f);
    const ScalarField s = sample_fn(g, [](double x, double) { return std::sin(x); });
    ScalarField d00 = R.at(0, 0);
    d00 -= s;
    CHECK(supnorm(d00) < 1e-12);
    ScalarField d11 = R.at(1, 1);
    d11 += s;
    CHECK(supnorm(d11) < 1e-12);
    CHECK(supnorm(R.at(0, 1)) < 1e-12);
}

TEST_CASE("anti-divergence contract on random fields") {
    std::mt19937_64 rng(13);
    for (int d : {2, 3}) {
        const TorusGrid g(d, 32);
        VectorField f(g, d);
        for (int c = 0; c < d; ++c) f.comp[c] = random_band(g, rng, 6, true);
        const MatrixField R = anti_divergence(f);
        // div R = f at spectral accuracy.
        VectorField dr = div(R);
        double num = 0.0;
        for (int c = 0; c < d; ++c) {
            ScalarField diff = dr.comp[c];
            diff -= f.comp[c];
            num += l2norm(diff) * l2norm(diff);
        }
        CHECK(std::sqrt(num) <= 1e-9 * l2norm(f));
        // Exact pointwise symmetry and zero trace.
        for (int i = 0; i < d; ++i)
            for (int j = i + 1; j < d; ++j)
                for (std::int64_t p = 0; p < g.total(); p += 97)
                    CHECK(R.at(i, j)[p] == R.at(j, i)[p]);
        for (std::int64_t p = 0; p < g.total(); p += 97) {
            double tr = 0.0;
            for (int i = 0; i < d; ++i) tr += R.at(i, i)[p];
            CHECK(tr == 0.0);
        }
        // Zero mean output.
        for (const auto& c : R.comp) CHECK(std::abs(mean(c)) < 1e-12);
    }
}

TEST_CASE("anti-divergence is linear") {
    std::mt19937_64 rng(15);
    const TorusGrid g(2, 32);
    VectorField f1(g, 2), f2(g, 2);
    for (int c = 0; c < 2; ++c) {
        f1.comp[c] = random_band(g, rng, 5, true);
        f2.comp[c] = random_band(g, rng, 5, true);
    }
    const double al = 1.7, be = -0.45;
    VectorField mix(g, 2);
    for (int c = 0; c < 2; ++c)
        for (std::int64_t p = 0; p < g.total(); ++p)
            mix.comp[c][p] = al * f1.comp[c][p] + be * f2.comp[c][p];
    const MatrixField Rm = anti_divergence(mix);
    const MatrixField R1 = anti_divergence(f1);
    const MatrixField R2 = anti_divergence(f2);
    double err = 0.0, scale = 0.0;
    for (int c = 0; c < 4; ++c)
        for (std::int64_t p = 0; p < g.total(); ++p) {
            err = std::max(err, std::abs(Rm.comp[c][p] - al * R1.comp[c][p] -
                                         be * R2.comp[c][p]));
            scale = std::max(scale, std::abs(Rm.comp[c][p]));
        }
    CHECK(err <= 1e-10 * std::max(1.0, scale));
}

TEST_CASE("anti-divergence mean obstruction") {
    const TorusGrid g(2, 32);
    VectorField f(g, 2);
    for (auto& x : f.comp[0].a) x = 1.0;
    CHECK_THROWS_AS(anti_divergence(f), precondition_error);
}

TEST_CASE("profile ladder: step, means, bounds, sup chain") {
    const auto L = build_profiles(0.5, 0.5, 1.0 / 32, 4096);
    // Zero means throughout the ladder.
    for (int k = 0; k <= 6; ++k) CHECK(L.mean_abs(k) < 1e-12);
    // Bounds of the mollified step.
    for (double x : L.h[0]) {
        CHECK(x <= 0.5 + 1e-12);
        CHECK(x >= -0.5 - 1e-12);
    }
    // Sup norms do not grow up the ladder.
    for (int k = 1; k <= 6; ++k) CHECK(L.sup(k) <= L.sup(0) + 1e-12);
    CHECK(L.sup(0) == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("profile ladder: first primitive drop over half a period") {
    // With the exact step, h1(1/2) - h1(0) = -1/4; mollification shifts it
    // by O(delta).
    const double delta = 1.0 / 128;
    const auto L = build_profiles(0.5, 0.5, delta, 8192);
    const double drop = L.eval(1, 0.5) - L.eval(1, 0.0);
    CHECK(drop == doctest::Approx(-0.25).epsilon(4 * delta));
}

TEST_CASE("profile ladder: derivative chain") {
    const int m = 8192;
    const auto L = build_profiles(0.4, 0.6, 1.0 / 32, m);
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 2; k <= 6; ++k) {
        double worst = 0.0;
        for (int t = 0; t < 200; ++t) {
            const double s = u(rng);
            const double h = 1.0 / m;
            const double fd = (L.eval(k, s + h) - L.eval(k, s - h)) / (2 * h);
            worst = std::max(worst, std::abs(fd - L.eval(k - 1, s)));
        }
        CHECK(worst < 50.0 / (m * m) + 1e-10);
    }
}

TEST_CASE("profile ladder parameter validation") {
    CHECK_THROWS_AS(build_profiles(0.5, 0.6, 1.0 / 32, 4096), precondition_error);
    CHECK_THROWS_AS(build_profiles(0.5, 0.5, 0.3, 4096), precondition_error);
    CHECK_THROWS_AS(build_profiles(0.5, 0.5, 1.0 / 32, 64), precondition_error);
}

TEST_CASE("cutoff bump: plateau, support, measured violation") {
    const TorusGrid g(2, 128);
    Box box;
    box.lo = {0.0, 0.0};
    box.hi = {M_PI, M_PI};
    const double delta = 0.5;
    const ScalarField phi = cutoff_bump(box, delta, g);

    // Exactly 1 at the center, 0 outside the box, within [0, 1] everywhere.
    std::vector<int> ix(2);
    double violation = 0.0;
    const double cellvol = g.cell_volume();
    for (std::int64_t p = 0; p < g.total(); ++p) {
        unflatten(g, p, ix.data());
        const std::vector<double> x = {g.coord(0, ix[0]), g.coord(1, ix[1])};
        CHECK(phi[p] >= 0.0);
        CHECK(phi[p] <= 1.0);
        if (!box.contains(x)) {
            CHECK(phi[p] == 0.0);
        } else if (phi[p] != 1.0) {
            violation += cellvol;
        }
    }
    CHECK(violation < delta);

    std::vector<double> center = box.center();
    std::int64_t pc = 0;
    for (int ax = 0; ax < 2; ++ax)
        pc = pc * g.n[ax] + static_cast<int>(std::lround(center[ax] / g.dx(ax)));
    CHECK(phi[pc] == 1.0);
}

TEST_CASE("cutoff bump: box too small for the requested delta") {
    const TorusGrid g(2, 16);
    Box box;
    box.lo = {0.0, 0.0};
    box.hi = {1.0, 1.0};
    CHECK_THROWS_AS(cutoff_bump(box, 1e-4, g), resolution_error);
}

TEST_CASE("H^-1 distance: single-mode values and homogeneity") {
    const TorusGrid g(2, 64);
    for (int K : {1, 4}) {
        VectorField v(g, 2), v0(g, 2);
        std::vector<int> ix(2);
        for (std::int64_t p = 0; p < g.total(); ++p) {
            unflatten(g, p, ix.data());
            v.comp[0][p] = std::sin(K * g.coord(0, ix[0]));
        }
        const double got = hminus1_distance(v, v0);
        const double expect = (1.0 / std::sqrt(2.0)) / std::sqrt(1.0 + K * K);
        CHECK(got == doctest::Approx(expect).epsilon(1e-12));
        VectorField v2 = v;
        v2 *= 2.0;
        CHECK(hminus1_distance(v2, v0) == doctest::Approx(2 * expect).epsilon(1e-12));
    }
    VectorField same(g, 2);
    CHECK(hminus1_distance(same, same) == 0.0);
}

TEST_CASE("oscillation is H^-1-small relative to L2") {
    const TorusGrid g(2, 128);
    VectorField v(g, 2), v0(g, 2);
    std::vector<int> ix(2);
    for (std::int64_t p = 0; p < g.total(); ++p) {
        unflatten(g, p, ix.data());
        v.comp[0][p] = std::sin(16 * g.coord(0, ix[0]));
    }
    CHECK(hminus1_distance(v, v0) < 0.1 * l2dist(v, v0));
}

}  // TEST_SUITE
