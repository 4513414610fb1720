#include <doctest.h>

#include <cmath>
#include <random>

#include "pwforge/driver.hpp"

using namespace pwforge;

namespace {

RunConfig base_config2(int n) {
    RunConfig cfg;
    cfg.d = 2;
    cfg.n = {n, n};
    cfg.mode = RunMode::periodic;
    cfg.energy.kind = EnergyProfile::Kind::constant;
    cfg.energy.base = 1.0;
    cfg.B = Mat::Zero(2, 2);
    cfg.seed = 1;
    return cfg;
}

VectorField shear_flow(const TorusGrid& g, double amp, int mode) {
    VectorField v(g);
    std::vector<int> ix(g.dim());
    for (std::int64_t p = 0; p < g.total(); ++p) {
        unflatten(g, p, ix.data());
        v.comp[0][p] = amp * std::sin(mode * g.coord(1, ix[1]));
    }
    return v;
}

}  // namespace

TEST_SUITE("driver") {

TEST_CASE("weak residual: zero field, exact shear, and a negative control") {
    const TorusGrid g(2, 64);
    const Mat B0 = Mat::Zero(2, 2);

    CHECK(weak_residual(VectorField(g), B0, 4, 7) == doctest::Approx(0.0));

    const VectorField shear = shear_flow(g, 0.7, 1);
    CHECK(weak_residual(shear, B0, 8, 7) < 1e-8);

    // An arbitrary non-solenoidal low-mode field is far from weak-stationary.
    VectorField junk(g, 2);
    std::vector<int> ix(2);
    for (std::int64_t p = 0; p < g.total(); ++p) {
        unflatten(g, p, ix.data());
        junk.comp[0][p] = std::sin(g.coord(0, ix[0])) + 0.3;
        junk.comp[1][p] = std::cos(2 * g.coord(0, ix[0])) * std::sin(g.coord(1, ix[1]));
    }
    CHECK(weak_residual(junk, B0, 8, 7) > 1e-3);
}

TEST_CASE("init_from_flow: zero base flow") {
    RunConfig cfg = base_config2(64);
    const TorusGrid g = cfg.grid();
    FlowResiduals res;
    IterationState st = init_from_flow(VectorField(g), ScalarField(g), cfg, &res);
    CHECK(res.momentum < 1e-12);
    CHECK(res.divergence < 1e-12);
    REQUIRE(st.history.size() == 1);
    CHECK(st.history[0].total_deficit ==
          doctest::Approx(g.volume()).epsilon(1e-12));  // e = 1, v = 0
    CHECK(st.history[0].min_hull_margin == doctest::Approx(0.5));
    CHECK(st.history[0].residual_div_v < 1e-12);
}

TEST_CASE("init_from_flow: shear regression") {
    RunConfig cfg = base_config2(64);
    const TorusGrid g = cfg.grid();
    const VectorField v0 = shear_flow(g, 0.7, 1);
    FlowResiduals res;
    IterationState st = init_from_flow(v0, ScalarField(g), cfg, &res);
    CHECK(res.momentum < 1e-8);
    CHECK(res.divergence < 1e-8);
    CHECK(st.history[0].residual_relaxed < 1e-8);
}

TEST_CASE("init_from_flow rejects undominated energy profiles") {
    RunConfig cfg = base_config2(64);
    cfg.energy.base = 0.25;  // below |v0|^2 somewhere
    const TorusGrid g = cfg.grid();
    const VectorField v0 = shear_flow(g, 0.7, 1);
    CHECK_THROWS_AS(init_from_flow(v0, ScalarField(g), cfg), precondition_error);
}

TEST_CASE("init_from_flow rejects non-stationary base flows") {
    RunConfig cfg = base_config2(64);
    cfg.energy.base = 4.0;
    const TorusGrid g = cfg.grid();
    VectorField bad(g, 2);
    std::vector<int> ix(2);
    for (std::int64_t p = 0; p < g.total(); ++p) {
        unflatten(g, p, ix.data());
        bad.comp[0][p] = std::sin(g.coord(0, ix[0]));  // div != 0
    }
    CHECK_THROWS_AS(init_from_flow(bad, ScalarField(g), cfg), precondition_error);
}

TEST_CASE("empty schedule returns the initial state") {
    RunConfig cfg = base_config2(64);
    IterationState st = run(cfg);
    CHECK(st.history.size() == 1);
    CHECK(l2norm(st.v) == 0.0);
}

TEST_CASE("gamma = 0 keeps the state unchanged") {
    RunConfig cfg = base_config2(64);
    cfg.gamma = 0.0;
    cfg.schedule = {{1, 8, 1.0 / 16}};
    IterationState st = run(cfg);
    CHECK(l2norm(st.v) == 0.0);
    CHECK(st.history.back().cells_done == 0);
}

TEST_CASE("two sweeps decrease the deficit and preserve safety, d = 2") {
    RunConfig cfg = base_config2(64);
    cfg.schedule = {{0, 8, 1.0 / 16}, {1, 8, 1.0 / 32}};
    IterationState st = run(cfg);
    REQUIRE(st.history.size() == 3);
    for (size_t s = 1; s < st.history.size(); ++s) {
        const auto& rec = st.history[s];
        CHECK(rec.total_deficit <= st.history[s - 1].total_deficit + 1e-9);
        CHECK(rec.min_hull_margin > 0.0);
        CHECK(rec.residual_div_v < 1e-8);
        CHECK(rec.residual_relaxed < 1e-8);
        CHECK(rec.sup_v_sq <= 1.0 + 1e-9);
        CHECK(rec.min_U_eig >= -1.0 / 2 - 1e-9);
    }
    CHECK(st.history.back().total_deficit < st.history.front().total_deficit);
    CHECK(st.history.back().cells_done > 0);
}

TEST_CASE("one sweep decreases the deficit, d = 3") {
    RunConfig cfg;
    cfg.d = 3;
    cfg.n = {32, 32, 32};
    cfg.mode = RunMode::periodic;
    cfg.energy.kind = EnergyProfile::Kind::constant;
    cfg.energy.base = 1.0;
    cfg.B = Mat::Zero(3, 3);
    cfg.seed = 2;
    cfg.schedule = {{1, 4, 1.0 / 16}};
    IterationState st = run(cfg);
    REQUIRE(st.history.size() == 2);
    CHECK(st.history[1].total_deficit < st.history[0].total_deficit);
    CHECK(st.history[1].min_hull_margin > 0.0);
    CHECK(st.history[1].residual_div_v < 1e-8);
    CHECK(st.history[1].residual_relaxed < 1e-8);
}

TEST_CASE("identical configs replay identical diagnostics") {
    RunConfig cfg = base_config2(64);
    cfg.schedule = {{1, 8, 1.0 / 16}};
    IterationState a = run(cfg);
    IterationState b = run(cfg);
    REQUIRE(a.history.size() == b.history.size());
    for (size_t s = 0; s < a.history.size(); ++s) {
        CHECK(a.history[s].total_deficit == b.history[s].total_deficit);
        CHECK(a.history[s].weak_residual == b.history[s].weak_residual);
        CHECK(a.history[s].hminus1_to_v0 == b.history[s].hminus1_to_v0);
        CHECK(a.history[s].cells_done == b.history[s].cells_done);
    }
    CHECK(l2dist(a.v, b.v) == 0.0);
}

TEST_CASE("different seeds give distinct approximants") {
    RunConfig cfg = base_config2(64);
    cfg.schedule = {{1, 8, 1.0 / 16}};
    cfg.seed = 1;
    IterationState a = run(cfg);
    cfg.seed = 2;
    IterationState b = run(cfg);
    CHECK(l2dist(a.v, b.v) > 1e-3);
}

TEST_CASE("compact mode: frozen cells and zero-state certification") {
    RunConfig cfg;
    cfg.d = 2;
    cfg.n = {64, 64};
    cfg.mode = RunMode::compact;
    cfg.energy.kind = EnergyProfile::Kind::compact_bump;
    cfg.energy.support.lo = {1.0, 1.0};
    cfg.energy.support.hi = {1.0 + M_PI, 1.0 + M_PI};
    cfg.energy.amplitude = 1.0;
    cfg.B = Mat::Zero(2, 2);
    cfg.schedule = {{2, 8, 1.0 / 16}};
    IterationState st = run(cfg);
    REQUIRE(st.history.size() == 2);
    // Cells outside the support are never touched.
    CHECK(st.history[1].cells_skipped > 0);
    CHECK(st.history[1].total_deficit < st.history[0].total_deficit);
    // Leakage outside the support is reported and small.
    CHECK(st.history[1].sup_outside_support < 0.1);
    MESSAGE("compact leakage sup: ", st.history[1].sup_outside_support);
}

TEST_CASE("compact mode, d = 3 ball-like profile") {
    RunConfig cfg;
    cfg.d = 3;
    cfg.n = {32, 32, 32};
    cfg.mode = RunMode::compact;
    cfg.energy.kind = EnergyProfile::Kind::compact_bump;
    cfg.energy.support.lo = {1.0, 1.0, 1.0};
    cfg.energy.support.hi = {1.0 + M_PI, 1.0 + M_PI, 1.0 + M_PI};
    cfg.B = Mat::Zero(3, 3);
    cfg.schedule = {{1, 4, 1.0 / 16}};
    IterationState st = run(cfg);
    CHECK(st.history.back().total_deficit < st.history.front().total_deficit);
}

TEST_CASE("assemble_solution: constants and violation accounting") {
    RunConfig cfg = base_config2(64);
    IterationState st = init_zero([&] {
        RunConfig c = cfg;
        c.mode = RunMode::compact;
        c.energy.kind = EnergyProfile::Kind::compact_bump;
        c.energy.support.lo = {1.0, 1.0};
        c.energy.support.hi = {1.0 + M_PI, 1.0 + M_PI};
        return c;
    }());
    const AssembledSolution sol = assemble_solution(st);
    // Zero state: p = -e/d and the violation is |v x v - e/d I|_F = e/sqrt(2).
    std::vector<int> ix(2);
    for (std::int64_t p = 0; p < st.grid.total(); p += 101) {
        CHECK(sol.p[p] == doctest::Approx(-st.e[p] / 2).epsilon(1e-12));
        CHECK(sol.constraint_violation[p] ==
              doctest::Approx(st.e[p] / std::sqrt(2.0)).epsilon(1e-9));
    }
}

}  // TEST_SUITE
