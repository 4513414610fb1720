#include "pwforge/driver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

namespace pwforge {

namespace {

constexpr double kGolden = 0.61803398874989484820;

double sq(double x) { return x * x; }

// Odometer over the nodes of one cell; fn receives the flat node index.
template <class F>
void for_each_cell_node(const TorusGrid& g, const std::vector<int>& cell,
                        int nodes_per_axis, F&& fn) {
    const int d = g.dim();
    std::vector<int> ix(d);
    std::vector<std::int64_t> stride(d);
    stride[d - 1] = 1;
    for (int ax = d - 2; ax >= 0; --ax) stride[ax] = stride[ax + 1] * g.n[ax + 1];
    std::vector<int> off(d, 0);
    while (true) {
        std::int64_t p = 0;
        for (int ax = 0; ax < d; ++ax)
            p += stride[ax] * (cell[ax] * nodes_per_axis + off[ax]);
        fn(p);
        int ax = d - 1;
        while (ax >= 0 && ++off[ax] == nodes_per_axis) off[ax--] = 0;
        if (ax < 0) break;
    }
}

VectorField apply_B(const Mat& B, const VectorField& v) {
    const int d = v.grid.dim();
    VectorField out(v.grid, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            if (B(i, j) == 0.0) continue;
            for (std::int64_t p = 0; p < v.grid.total(); ++p)
                out.comp[i][p] += B(i, j) * v.comp[j][p];
        }
    return out;
}

// Random real band-limited field: a short sum of integer-mode cosines.
ScalarField random_lowmode(const TorusGrid& g, std::mt19937_64& rng, int kmax) {
    std::uniform_int_distribution<int> ki(-kmax, kmax);
    std::uniform_real_distribution<double> ud(0.0, 2.0 * M_PI);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const int d = g.dim();
    const int terms = 6;
    std::vector<std::vector<int>> kv(terms, std::vector<int>(d));
    std::vector<double> amp(terms), phase(terms);
    for (int t = 0; t < terms; ++t) {
        bool zero = true;
        for (int ax = 0; ax < d; ++ax) {
            kv[t][ax] = ki(rng);
            if (kv[t][ax] != 0) zero = false;
        }
        if (zero) kv[t][0] = 1;
        amp[t] = gauss(rng);
        phase[t] = ud(rng);
    }
    ScalarField f(g);
    std::vector<int> ix(d);
    for (std::int64_t p = 0; p < g.total(); ++p) {
        unflatten(g, p, ix.data());
        double s = 0.0;
        for (int t = 0; t < terms; ++t) {
            double arg = phase[t];
            for (int ax = 0; ax < d; ++ax) arg += kv[t][ax] * g.coord(ax, ix[ax]);
            s += amp[t] * std::cos(arg);
        }
        f[p] = s;
    }
    return f;
}

double matrix_2norm(const Mat& B) {
    if (B.size() == 0) return 0.0;
    Eigen::JacobiSVD<Mat> svd(B);
    return svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
}

DiagnosticsRecord make_record(const IterationState& st, const RunConfig& cfg,
                              int sweep_index, const VectorField* v_before,
                              double wall_s, int done, int skipped);

StatePoint node_state(const IterationState& st, std::int64_t p) {
    const int d = st.grid.dim();
    StatePoint w = StatePoint::zero(d);
    for (int ax = 0; ax < d; ++ax) w.v(ax) = st.v.comp[ax][p];
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) w.U(i, j) = st.U.at(i, j)[p];
    return w;
}

}  // namespace

double EnergyProfile::eval(const std::vector<double>& x) const {
    switch (kind) {
        case Kind::constant:
            return base;
        case Kind::cosine: {
            double e = base;
            for (size_t i = 0; i < amps.size() && i < x.size(); ++i)
                e += amps[i] * std::cos(x[i]);
            return e;
        }
        case Kind::compact_bump: {
            if (!support.contains(x)) return 0.0;
            double v = amplitude;
            for (int ax = 0; ax < support.dim(); ++ax) {
                const double w = ramp_fraction * support.side(ax);
                v *= smooth_step01((x[ax] - support.lo[ax]) / w) *
                     smooth_step01((support.hi[ax] - x[ax]) / w);
            }
            return v;
        }
        case Kind::grid:
            throw precondition_error("EnergyProfile: grid profiles carry samples only");
    }
    return 0.0;
}

ScalarField EnergyProfile::sample(const TorusGrid& g) const {
    if (kind == Kind::grid) {
        if (samples.grid != g)
            throw precondition_error("EnergyProfile: sample grid mismatch");
        return samples;
    }
    ScalarField f(g);
    const int d = g.dim();
    std::vector<int> ix(d);
    std::vector<double> x(d);
    for (std::int64_t p = 0; p < g.total(); ++p) {
        unflatten(g, p, ix.data());
        for (int ax = 0; ax < d; ++ax) x[ax] = g.coord(ax, ix[ax]);
        f[p] = eval(x);
    }
    return f;
}

void RunConfig::validate() const {
    if (d < 2) throw config_error("config: d >= 2 required");
    if (static_cast<int>(n.size()) != d) throw config_error("config: grid size list must have d entries");
    TorusGrid g(n);
    if (B.rows() != d || B.cols() != d) throw config_error("config: B must be d x d");
    if (!B.allFinite()) throw config_error("config: B has nonfinite entries");
    if (!(gamma >= 0.0) || !(gamma <= 1.0)) throw config_error("config: gamma in [0, 1]");
    int nmin = n[0];
    for (int ni : n) nmin = std::min(nmin, ni);
    for (const auto& s : schedule) {
        const int cells = 1 << s.k_cells;
        for (int ni : n)
            if (ni % cells != 0)
                throw config_error("config: 2^k_cells must divide every grid axis");
        if (s.lambda * 8 > nmin)
            throw config_error("config: lambda under-resolved (needs >= 8 nodes per oscillation)");
        if (!(s.delta > 0.0) || !(s.delta < 0.25))
            throw config_error("config: sweep delta out of range (0, 1/4)");
    }
    if (mode == RunMode::compact) {
        if (energy.kind != EnergyProfile::Kind::compact_bump &&
            energy.kind != EnergyProfile::Kind::grid)
            throw config_error("config: compact mode needs a compactly supported profile");
        if (energy.kind == EnergyProfile::Kind::compact_bump) {
            for (int ax = 0; ax < d; ++ax) {
                const double clear = 2.0 * g.dx(ax);
                if (energy.support.lo[ax] < clear ||
                    energy.support.hi[ax] > 2.0 * M_PI - clear)
                    throw config_error("config: support must clear the domain boundary by >= 2 cells");
            }
        }
    } else {
        if (energy.kind == EnergyProfile::Kind::cosine) {
            double worst = energy.base;
            for (double a : energy.amps) worst -= std::abs(a);
            if (!(worst > 0.0)) throw config_error("config: energy profile must stay positive");
        }
        if (energy.kind == EnergyProfile::Kind::constant && !(energy.base > 0.0))
            throw config_error("config: energy profile must be positive");
    }
}

double pointwise_margin(int d, const double* v, const double* U, double r) {
    if (d == 2) {
        const double a11 = v[0] * v[0] - U[0];
        const double a12 = v[0] * v[1] - U[1];
        const double a22 = v[1] * v[1] - U[3];
        const double h = 0.5 * (a11 - a22);
        return r / 2 - (0.5 * (a11 + a22) + std::hypot(h, a12));
    }
    if (d == 3) {
        Eigen::Matrix3d A;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) A(i, j) = v[i] * v[j] - U[i * 3 + j];
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es;
        es.computeDirect(A, Eigen::EigenvaluesOnly);
        return r / 3 - es.eigenvalues().maxCoeff();
    }
    Mat A(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) A(i, j) = v[i] * v[j] - U[i * d + j];
    Eigen::SelfAdjointEigenSolver<Mat> es(A, Eigen::EigenvaluesOnly);
    return r / d - es.eigenvalues().maxCoeff();
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (a + 1) + 0xbf58476d1ce4e5b9ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double weak_residual(const VectorField& v, const Mat& B, int n_tests,
                     std::uint64_t seed) {
    const TorusGrid& g = v.grid;
    const int d = g.dim();
    const double vnorm = l2norm(v);
    const double Bnorm = matrix_2norm(B);
    double worst = 0.0;
    for (int t = 0; t < n_tests; ++t) {
        std::mt19937_64 rng(mix_seed(seed, t, 0));
        VectorField phi0(g, d);
        for (int c = 0; c < d; ++c) phi0.comp[c] = random_lowmode(g, rng, 3);
        VectorField corr = leray_correct(phi0);
        VectorField phi = phi0;
        phi += corr;
        ScalarField psi = random_lowmode(g, rng, 3);

        MatrixField dphi = jacobian(phi);
        VectorField dpsi = grad(psi);
        double I1 = 0.0, I2 = 0.0;
        for (std::int64_t p = 0; p < g.total(); ++p) {
            double s = 0.0;
            for (int i = 0; i < d; ++i) {
                double Bv = 0.0;
                for (int j = 0; j < d; ++j) {
                    s += v.comp[i][p] * v.comp[j][p] * dphi.at(i, j)[p];
                    Bv += B(i, j) * v.comp[j][p];
                }
                s += Bv * phi.comp[i][p];
                I2 += v.comp[i][p] * dpsi.comp[i][p];
            }
            I1 += s;
        }
        const double N = static_cast<double>(g.total());
        I1 /= N;
        I2 /= N;
        double sup_dphi = 0.0, sup_dpsi = 0.0;
        for (std::int64_t p = 0; p < g.total(); ++p) {
            double s = 0.0;
            for (const auto& c : dphi.comp) s += sq(c[p]);
            sup_dphi = std::max(sup_dphi, s);
            s = 0.0;
            for (const auto& c : dpsi.comp) s += sq(c[p]);
            sup_dpsi = std::max(sup_dpsi, s);
        }
        const double phi_c1 = supnorm(phi) + std::sqrt(sup_dphi);
        const double psi_c1 = supnorm(psi) + std::sqrt(sup_dpsi);
        const double den1 = phi_c1 * (vnorm * vnorm + Bnorm * vnorm) + 1e-300;
        const double den2 = psi_c1 * vnorm + 1e-300;
        worst = std::max(worst, std::abs(I1) / den1 + std::abs(I2) / den2);
    }
    return worst;
}

namespace {

// Shared tail of both initializers: constraint fields, sampled d = 2
// relaxed-set certification, and the sweep-0 record.
void finish_init(IterationState& st, const RunConfig& cfg) {
    const int d = st.grid.dim();
    if (d == 2) {
        // Certification sample: the min-margin node plus a golden-stride
        // sweep. A state that is exactly zero is scale-invariant, so one
        // check covers every energy level.
        std::vector<std::int64_t> picks;
        const std::int64_t N = st.grid.total();
        double vmax = 0.0;
        for (int c = 0; c < d; ++c) vmax = std::max(vmax, supnorm(st.v.comp[c]));
        if (vmax == 0.0) {
            if (!in_lamination_hull(StatePoint::zero(2), 1.0, cfg.hull.depth,
                                    cfg.hull.n_dirs, cfg.hull.n_samples))
                throw numeric_error(
                    "init: zero state failed relaxed-set certification (d = 2)");
        } else {
            double worst = std::numeric_limits<double>::infinity();
            std::int64_t worst_p = 0;
            double vbuf[2], Ubuf[4];
            for (std::int64_t p = 0; p < N; ++p) {
                if (st.e[p] <= cfg.deficit_floor) continue;
                vbuf[0] = st.v.comp[0][p];
                vbuf[1] = st.v.comp[1][p];
                for (int c = 0; c < 4; ++c) Ubuf[c] = st.U.comp[c][p];
                const double m = pointwise_margin(2, vbuf, Ubuf, st.e[p]);
                if (m < worst) {
                    worst = m;
                    worst_p = p;
                }
            }
            picks.push_back(worst_p);
            for (int i = 1; i <= 8; ++i)
                picks.push_back(static_cast<std::int64_t>(
                    std::fmod(i * kGolden, 1.0) * N));
            for (std::int64_t p : picks) {
                if (st.e[p] <= cfg.deficit_floor) continue;
                if (!in_lamination_hull(node_state(st, p), st.e[p], cfg.hull.depth,
                                        cfg.hull.n_dirs, cfg.hull.n_samples))
                    throw numeric_error("init: node " + std::to_string(p) +
                                        " failed relaxed-set certification (d = 2)");
            }
        }
    }
    st.history.push_back(make_record(st, cfg, 0, nullptr, 0.0, 0, 0));
}

}  // namespace

IterationState init_from_flow(const VectorField& v0, const ScalarField& p0,
                              const RunConfig& cfg, FlowResiduals* residuals) {
    cfg.validate();
    const TorusGrid g = cfg.grid();
    const int d = g.dim();
    if (v0.grid != g || p0.grid != g)
        throw precondition_error("init_from_flow: field grids do not match the config");

    // Stationary residual gate.
    MatrixField vv(g);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            for (std::int64_t p = 0; p < g.total(); ++p)
                vv.at(i, j)[p] = v0.comp[i][p] * v0.comp[j][p];
    VectorField mom = div(vv);
    {
        VectorField gp = grad(p0);
        VectorField Bv = apply_B(cfg.B, v0);
        for (int c = 0; c < d; ++c)
            for (std::int64_t p = 0; p < g.total(); ++p)
                mom.comp[c][p] += gp.comp[c][p] - Bv.comp[c][p];
    }
    FlowResiduals res;
    res.momentum = l2norm(mom);
    res.divergence = l2norm(div(v0));
    if (residuals) *residuals = res;
    if (res.momentum > cfg.tol.flow_residual || res.divergence > cfg.tol.flow_residual)
        throw precondition_error("init_from_flow: base flow is not a stationary solution");

    IterationState st;
    st.grid = g;
    st.e = cfg.energy.sample(g);
    for (std::int64_t p = 0; p < g.total(); ++p) {
        double v2 = 0.0;
        for (int c = 0; c < d; ++c) v2 += sq(v0.comp[c][p]);
        if (!(st.e[p] > v2))
            throw precondition_error("init_from_flow: e(x) > |v0(x)|^2 violated");
    }
    st.v = v0;
    st.v0 = v0;
    st.U = vv;
    for (std::int64_t p = 0; p < g.total(); ++p) {
        double v2 = 0.0;
        for (int c = 0; c < d; ++c) v2 += sq(v0.comp[c][p]);
        for (int i = 0; i + 1 < d; ++i) st.U.at(i, i)[p] -= v2 / d;
        double tr = 0.0;
        for (int i = 0; i + 1 < d; ++i) tr += st.U.at(i, i)[p];
        st.U.at(d - 1, d - 1)[p] = -tr;
    }
    st.q = p0;
    for (std::int64_t p = 0; p < g.total(); ++p) {
        double v2 = 0.0;
        for (int c = 0; c < d; ++c) v2 += sq(v0.comp[c][p]);
        st.q[p] += v2 / d;
    }
    finish_init(st, cfg);
    return st;
}

IterationState init_zero(const RunConfig& cfg) {
    cfg.validate();
    const TorusGrid g = cfg.grid();
    IterationState st;
    st.grid = g;
    st.e = cfg.energy.sample(g);
    st.v = VectorField(g);
    st.v0 = VectorField(g);
    st.U = MatrixField(g);
    st.q = ScalarField(g);
    finish_init(st, cfg);
    return st;
}

namespace {

DiagnosticsRecord make_record(const IterationState& st, const RunConfig& cfg,
                              int sweep_index, const VectorField* v_before,
                              double wall_s, int done, int skipped) {
    const TorusGrid& g = st.grid;
    const int d = g.dim();
    const std::int64_t N = g.total();
    DiagnosticsRecord rec;
    rec.sweep = sweep_index;
    rec.wall_time_s = wall_s;
    rec.cells_done = done;
    rec.cells_skipped = skipped;

    std::vector<double> vbuf(d), Ubuf(static_cast<size_t>(d) * d);
    std::vector<double> zero(d, 0.0);
    double min_margin = std::numeric_limits<double>::infinity();
    double total_deficit = 0.0, sup_deficit = 0.0, sup_v2 = 0.0;
    double min_eig = std::numeric_limits<double>::infinity();
    double sup_out = 0.0;
    const bool compact = cfg.mode == RunMode::compact;
    for (std::int64_t p = 0; p < N; ++p) {
        double v2 = 0.0;
        for (int c = 0; c < d; ++c) {
            vbuf[c] = st.v.comp[c][p];
            v2 += sq(vbuf[c]);
        }
        for (int c = 0; c < d * d; ++c) Ubuf[c] = st.U.comp[c][p];
        const double deficit = st.e[p] - v2;
        total_deficit += deficit;
        sup_deficit = std::max(sup_deficit, deficit);
        sup_v2 = std::max(sup_v2, v2);
        if (deficit > cfg.deficit_floor)
            min_margin = std::min(min_margin,
                                  pointwise_margin(d, vbuf.data(), Ubuf.data(), st.e[p]));
        // lambda_min(U) via the same helper: margin(0, U, 1) = 1/d - lambda_max(-U).
        min_eig = std::min(min_eig,
                           pointwise_margin(d, zero.data(), Ubuf.data(), 1.0) - 1.0 / d);
        if (compact && st.e[p] == 0.0) sup_out = std::max(sup_out, std::sqrt(v2));
    }
    rec.total_deficit = total_deficit / N * g.volume();
    rec.sup_deficit = sup_deficit;
    rec.sup_v_sq = sup_v2;
    rec.min_U_eig = (min_eig == std::numeric_limits<double>::infinity()) ? 0.0 : min_eig;
    rec.min_hull_margin =
        (min_margin == std::numeric_limits<double>::infinity()) ? 0.0 : min_margin;
    rec.sup_outside_support = sup_out;

    {
        ScalarField dv = div(st.v);
        MatrixField J = jacobian(st.v);
        rec.residual_div_v = l2norm(dv) / std::max(l2norm(J), 1e-300);
    }
    {
        VectorField R = div(st.U);
        VectorField gq = grad(st.q);
        VectorField Bv = apply_B(cfg.B, st.v);
        const double den = l2norm(R) + l2norm(gq) + l2norm(Bv) + 1e-300;
        for (int c = 0; c < d; ++c)
            for (std::int64_t p = 0; p < N; ++p)
                R.comp[c][p] += gq.comp[c][p] - Bv.comp[c][p];
        rec.residual_relaxed = l2norm(R) / den;
    }
    rec.weak_residual =
        weak_residual(st.v, cfg.B, cfg.weak_tests, mix_seed(cfg.seed, 77, sweep_index));
    rec.hminus1_to_v0 = hminus1_distance(st.v, st.v0);
    rec.l2_to_v0 = l2dist(st.v, st.v0);
    rec.l2_change = v_before ? l2dist(st.v, *v_before) : 0.0;
    return rec;
}

}  // namespace

DiagnosticsRecord sweep(IterationState& st, const RunConfig& cfg,
                        const SweepStep& step, int sweep_index) {
    const auto t0 = std::chrono::steady_clock::now();
    const TorusGrid& g = st.grid;
    const int d = g.dim();
    const int cells = 1 << step.k_cells;
    for (int ni : g.n)
        if (ni % cells != 0)
            throw precondition_error("sweep: cells do not divide the grid");
    const int mnodes = g.n[0] / cells;  // per axis (uniform grids assumed here)
    for (int ni : g.n)
        if (ni / cells != mnodes)
            throw precondition_error("sweep: anisotropic grids need matching cell counts");
    const double cw = 2.0 * M_PI / cells;
    const VectorField v_before = st.v;

    HullParams node_hull = cfg.hull;  // lighter a-posteriori membership checks
    node_hull.n_dirs = std::max(16, cfg.hull.n_dirs / 2);
    node_hull.n_samples = std::max(8, cfg.hull.n_samples / 2);

    int done = 0, skipped = 0;
    std::int64_t ncells = 1;
    for (int ax = 0; ax < d; ++ax) ncells *= cells;

    std::vector<int> cell(d);
    std::vector<double> vbuf(d), Ubuf(static_cast<size_t>(d) * d);
    for (std::int64_t cidx = 0; cidx < ncells; ++cidx) {
        {
            std::int64_t cc = cidx;
            for (int ax = d - 1; ax >= 0; --ax) {
                cell[ax] = static_cast<int>(cc % cells);
                cc /= cells;
            }
        }
        // Cell statistics: mean state, min energy.
        StatePoint wbar = StatePoint::zero(d);
        double r = std::numeric_limits<double>::infinity();
        std::int64_t count = 0;
        for_each_cell_node(g, cell, mnodes, [&](std::int64_t p) {
            for (int c = 0; c < d; ++c) wbar.v(c) += st.v.comp[c][p];
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) wbar.U(i, j) += st.U.at(i, j)[p];
            r = std::min(r, st.e[p]);
            ++count;
        });
        wbar.v /= double(count);
        wbar.U /= double(count);
        wbar.U = sym0_project(wbar.U);

        if (r <= cfg.deficit_floor) {
            ++skipped;
            continue;
        }
        if (energy_deficit(wbar, r) <= cfg.deficit_floor) {
            ++skipped;
            continue;
        }
        if (hull_margin(wbar, r) <= cfg.margin_floor) {
            ++skipped;
            continue;
        }

        SegmentConfig scfg = cfg.segment;
        scfg.hull = cfg.hull;
        scfg.rng_seed = mix_seed(cfg.seed, sweep_index, cidx);
        AdmissibleSegment seg;
        try {
            if (d == 2) {
                seg = admissible_segment_2d(wbar, r, scfg, step.lambda);
            } else {
                seg = admissible_segment(wbar, r, scfg);
                seg = align_segment_to_lattice(seg, r, step.lambda, scfg);
            }
        } catch (const infeasible_error&) {
            ++skipped;
            continue;
        } catch (const numeric_error&) {
            ++skipped;
            continue;
        }

        // Amplitude policy: start at gamma of the certified direction and
        // back off geometrically on any failed a-posteriori check.
        AdmissibleSegment seg_a = seg;
        seg_a.direction = seg.direction * cfg.gamma;
        seg_a.q_bar = seg.q_bar * cfg.gamma;
        Box box;
        box.lo.resize(d);
        box.hi.resize(d);
        for (int ax = 0; ax < d; ++ax) {
            box.lo[ax] = cell[ax] * cw;
            box.hi[ax] = (cell[ax] + 1) * cw;
        }
        LocalizedWave wave;
        try {
            WaveSpec spec = WaveSpec::from_segment(seg_a, box, step.delta, cfg.B);
            WaveBuildOptions opt;
            opt.keep_primary_profile = false;
            opt.ramp_width = 1.3 * 2.0 * M_PI / spec.lambda();
            wave = build_localized_wave(spec, g, opt);
        } catch (const resolution_error&) {
            ++skipped;
            continue;
        } catch (const precondition_error&) {
            ++skipped;
            continue;
        }

        bool accepted = false;
        for (int attempt = 0; attempt <= 5; ++attempt) {
            // (a) the cell's kinetic mass must grow; (b) margins must stay
            // positive at every active cell node.
            double gain = 0.0;
            bool safe = true;
            double worst_add = -1.0;
            std::int64_t worst_p = -1;
            for_each_cell_node(g, cell, mnodes, [&](std::int64_t p) {
                if (!safe) return;
                double cross = 0.0, m2 = 0.0;
                for (int c = 0; c < d; ++c) {
                    cross += st.v.comp[c][p] * wave.v.comp[c][p];
                    m2 += sq(wave.v.comp[c][p]);
                }
                gain += 2.0 * cross + m2;
                if (st.e[p] > cfg.deficit_floor) {
                    double add2 = m2;
                    for (int c = 0; c < d; ++c) vbuf[c] = st.v.comp[c][p] + wave.v.comp[c][p];
                    for (int c = 0; c < d * d; ++c) {
                        Ubuf[c] = st.U.comp[c][p] + wave.U.comp[c][p];
                        add2 += sq(wave.U.comp[c][p]);
                    }
                    if (pointwise_margin(d, vbuf.data(), Ubuf.data(), st.e[p]) <= 0.0)
                        safe = false;
                    if (add2 > worst_add) {
                        worst_add = add2;
                        worst_p = p;
                    }
                }
            });
            if (safe && gain > 0.0 && d == 2 && worst_p >= 0) {
                // (c) sampled relaxed-set certification at the most-perturbed
                // node and a few pseudo-random ones.
                std::vector<std::int64_t> picks = {worst_p};
                for (int i = 1; i < cfg.hull_check_nodes; ++i) {
                    const double t = std::fmod((i + 1) * kGolden + 0.37 * sweep_index, 1.0);
                    std::int64_t off = static_cast<std::int64_t>(t * count);
                    std::int64_t pi = 0, idx = 0;
                    for_each_cell_node(g, cell, mnodes, [&](std::int64_t p) {
                        if (idx++ == off) pi = p;
                    });
                    picks.push_back(pi);
                }
                for (std::int64_t p : picks) {
                    if (st.e[p] <= cfg.deficit_floor) continue;
                    StatePoint w = node_state(st, p);
                    for (int c = 0; c < d; ++c) w.v(c) += wave.v.comp[c][p];
                    for (int i = 0; i < d; ++i)
                        for (int j = 0; j < d; ++j) w.U(i, j) += wave.U.at(i, j)[p];
                    if (!in_lamination_hull(w, st.e[p], node_hull.depth,
                                            node_hull.n_dirs, node_hull.n_samples)) {
                        safe = false;
                        break;
                    }
                }
            }
            if (safe && gain > 0.0) {
                accepted = true;
                break;
            }
            wave.v *= 0.5;
            wave.U *= 0.5;
            wave.q *= 0.5;
        }
        if (!accepted) {
            ++skipped;
            continue;
        }
        st.v += wave.v;
        st.U += wave.U;
        ++done;
    }

    // Pressure recompute from the elliptic decomposition.
    {
        ScalarField f = div(apply_B(cfg.B, st.v));
        ScalarField ddU = div(div(st.U));
        f -= ddU;
        st.q = inv_laplacian(f);
    }
    ++st.sweep;

    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    DiagnosticsRecord rec =
        make_record(st, cfg, sweep_index + 1, &v_before, wall, done, skipped);
    if (rec.residual_div_v > cfg.tol.global_residual ||
        rec.residual_relaxed > cfg.tol.global_residual)
        throw numeric_error("sweep: global residual blow-up");
    st.history.push_back(rec);
    return rec;
}

IterationState run(const RunConfig& cfg,
                   const std::function<void(const DiagnosticsRecord&)>& on_sweep) {
    cfg.validate();
    IterationState st;
    if (cfg.mode == RunMode::compact) {
        st = init_zero(cfg);
    } else {
        const TorusGrid g = cfg.grid();
        VectorField v0(g);
        ScalarField p0(g);
        if (cfg.base_flow.kind == BaseFlow::Kind::shear) {
            std::vector<int> ix(cfg.d);
            for (std::int64_t p = 0; p < g.total(); ++p) {
                unflatten(g, p, ix.data());
                v0.comp[0][p] =
                    cfg.base_flow.amplitude * std::sin(cfg.base_flow.mode * g.coord(1, ix[1]));
            }
        }
        st = init_from_flow(v0, p0, cfg);
    }
    if (on_sweep && !st.history.empty()) on_sweep(st.history.front());
    for (size_t s = 0; s < cfg.schedule.size(); ++s) {
        DiagnosticsRecord rec = sweep(st, cfg, cfg.schedule[s], static_cast<int>(s));
        if (on_sweep) on_sweep(rec);
    }
    return st;
}

AssembledSolution assemble_solution(const IterationState& st) {
    const TorusGrid& g = st.grid;
    const int d = g.dim();
    AssembledSolution out;
    out.v = st.v;
    out.p = st.q;
    out.constraint_violation = ScalarField(g);
    for (std::int64_t p = 0; p < g.total(); ++p) {
        out.p[p] -= st.e[p] / d;
        double v2 = 0.0;
        for (int c = 0; c < d; ++c) v2 += sq(st.v.comp[c][p]);
        double viol = 0.0;
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
                const double target = st.v.comp[i][p] * st.v.comp[j][p] -
                                      (i == j ? st.e[p] / d : 0.0);
                viol += sq(st.U.at(i, j)[p] - target);
            }
        out.constraint_violation[p] = std::sqrt(viol);
        out.violation_l1 += out.constraint_violation[p];
    }
    out.violation_l1 = out.violation_l1 / g.total() * g.volume();
    return out;
}

}  // namespace pwforge
