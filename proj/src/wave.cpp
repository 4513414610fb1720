#include "pwforge/wave.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pwforge {

namespace {

double state_dot(const StatePoint& a, const StatePoint& b) {
    return a.v.dot(b.v) + (a.U.array() * b.U.array()).sum();
}

// Distance from p to the segment [w1, w1 + e] in the state metric.
double segment_dist(const StatePoint& p, const StatePoint& w1, const StatePoint& e,
                    double e2) {
    const StatePoint rel = p - w1;
    const double t = std::clamp(state_dot(rel, e) / e2, 0.0, 1.0);
    return (rel - e * t).norm();
}

}  // namespace

WaveSpec WaveSpec::from_segment(const AdmissibleSegment& seg, Box region,
                                double delta, Mat B) {
    if (seg.kappa.size() == 0)
        throw precondition_error("WaveSpec: segment has no lattice wave vector");
    WaveSpec s;
    s.w1 = seg.center - seg.direction;
    s.w2 = seg.center + seg.direction;
    s.mu1 = s.mu2 = 0.5;
    s.kappa = seg.kappa;
    s.q_bar = 2.0 * seg.q_bar;  // q scales with w2 - w1 = 2 * direction
    s.region = std::move(region);
    s.delta = delta;
    s.B = std::move(B);
    return s;
}

void WaveSpec::validate(const TorusGrid& grid, double tol) const {
    const int d = grid.dim();
    if (w1.dim() != d || w2.dim() != d || kappa.size() != d)
        throw precondition_error("WaveSpec: dimension mismatch");
    if (kappa.cast<double>().norm() == 0.0)
        throw precondition_error("WaveSpec: kappa must be nonzero");
    if (!(mu1 > 0.0) || !(mu2 > 0.0) || std::abs(mu1 + mu2 - 1.0) > 1e-12)
        throw precondition_error("WaveSpec: mu1, mu2 > 0 with mu1 + mu2 = 1");
    if (B.rows() != d || B.cols() != d)
        throw precondition_error("WaveSpec: B must be d x d");
    int nmin = grid.n[0];
    for (int ax = 1; ax < d; ++ax) nmin = std::min(nmin, grid.n[ax]);
    if (static_cast<double>(nmin) < 8.0 * lambda())
        throw resolution_error("WaveSpec: grid resolves fewer than 8 nodes per oscillation");
    const StatePoint b = bar();
    if (b.norm() == 0.0) throw precondition_error("WaveSpec: w1 = w2");
    const Vec x = xi();
    const double scale = std::max(1.0, b.norm());
    if ((b.U * x + q_bar * x).norm() > tol * scale ||
        std::abs(b.v.dot(x)) > tol * scale)
        throw precondition_error("WaveSpec: w2 - w1 violates the cone conditions");
    if (region.dim() != d) throw precondition_error("WaveSpec: region dimension");
    for (int ax = 0; ax < d; ++ax) {
        if (!(region.lo[ax] >= 0.0) || !(region.hi[ax] <= 2.0 * M_PI + 1e-12) ||
            !(region.lo[ax] < region.hi[ax]))
            throw precondition_error("WaveSpec: region must fit the fundamental domain");
    }
    if (!(delta > 0.0) || !(delta < std::min(mu1, mu2) / 2))
        throw precondition_error("WaveSpec: delta out of range");
}

LocalizedWave build_localized_wave(const WaveSpec& spec, const TorusGrid& grid,
                                   const WaveBuildOptions& opt) {
    spec.validate(grid);
    const int d = grid.dim();
    const std::int64_t N = grid.total();
    const StatePoint bar = spec.bar();
    const double lam_op = spec.lambda() / (2.0 * M_PI);

    // Cutoff volume budget. The ramp width is floored at both the grid
    // resolution and (by default) ramp_periods oscillation periods; the
    // effective budget is reported in the diagnostics.
    double dxmax = grid.dx(0);
    for (int ax = 1; ax < d; ++ax) dxmax = std::max(dxmax, grid.dx(ax));
    double min_side = std::numeric_limits<double>::infinity();
    for (int ax = 0; ax < d; ++ax)
        if (!spec.region.full_axis(ax))
            min_side = std::min(min_side, spec.region.side(ax));
    double w_target = 0.0;
    if (std::isfinite(min_side)) {  // at least one ramped axis
        w_target = opt.min_ramp_cells * dxmax;
        if (opt.ramp_width > 0.0) {
            w_target = std::max(w_target, opt.ramp_width);
        } else if (opt.ramp_periods > 0.0) {
            w_target = std::max(
                w_target, std::min(min_side / 3.0,
                                   opt.ramp_periods * 2.0 * M_PI / spec.lambda()));
        }
    }
    const double requested = spec.delta * spec.region.volume();
    const double floor_vol =
        cutoff_violation_volume(spec.region, w_target) / 0.9 * (1.0 + 1e-9);
    const double delta_cut = std::max(requested, floor_vol);
    if (delta_cut >= spec.region.volume())
        throw resolution_error("build_localized_wave: region unresolvable at this grid");
    ScalarField phi = cutoff_bump(spec.region, delta_cut, grid, opt.min_ramp_cells);

    const ProfileLadder ladder =
        build_profiles(spec.mu1, spec.mu2, spec.delta, opt.profile_resolution);

    // Oscillation phase in profile periods: one per-axis table suffices.
    double phase0 = spec.phase;
    if (opt.align_phase_to_grid) {
        double step = 0.0;  // phase increment per node along the dominant axis
        for (int ax = 0; ax < d; ++ax)
            step = std::max(step, std::abs(double(spec.kappa(ax))) / grid.n[ax]);
        phase0 += 0.5 * step;
    }
    std::vector<std::vector<double>> ph(d);
    for (int ax = 0; ax < d; ++ax) {
        ph[ax].resize(grid.n[ax]);
        for (int i = 0; i < grid.n[ax]; ++i)
            ph[ax][i] = static_cast<double>(spec.kappa(ax)) * i / grid.n[ax];
    }
    auto phase_at = [&](const int* ix) {
        double s = phase0;
        for (int ax = 0; ax < d; ++ax) s += ph[ax][ix[ax]];
        return s;
    };

    ScalarField G(grid);
    {
        std::vector<int> ix(d);
        for (std::int64_t p = 0; p < N; ++p) {
            unflatten(grid, p, ix.data());
            G[p] = ladder.eval(6, phase_at(ix.data())) * phi[p];
        }
    }

    // One forward transform; everything else is per-mode algebra.
    Spectrum Gh = rfft(G);
    Spectrum Dh(grid);
    const double lam6 = std::pow(lam_op, 6);
    for_each_mode(grid, [&](std::int64_t idx, const int* k, double) {
        double k2 = 0.0;
        for (int ax = 0; ax < d; ++ax) k2 += double(k[ax]) * k[ax];
        Dh.c[idx] = -(k2 * k2 * k2) / lam6 * Gh.c[idx];
    });
    Gh.c.clear();
    Gh.c.shrink_to_fit();

    // Divergence-free velocity spectra.
    std::vector<Spectrum> vh(d, Spectrum(grid));
    for_each_mode(grid, [&](std::int64_t idx, const int* k, double) {
        const std::complex<double> dh = Dh.c[idx];
        double k2 = 0.0, kv = 0.0;
        for (int ax = 0; ax < d; ++ax) {
            k2 += double(k[ax]) * k[ax];
            kv += double(k[ax]) * bar.v(ax);
        }
        for (int ax = 0; ax < d; ++ax) {
            std::complex<double> val = bar.v(ax) * dh;
            if (k2 > 0.0) val -= double(k[ax]) * kv * dh / k2;
            vh[ax].c[idx] = val;
        }
    });

    // Matrix spectra (upper triangle; diagonal balanced at field level) and
    // residual accumulators in the same pass.
    const int nuniq = d * (d + 1) / 2;
    std::vector<Spectrum> Uh(nuniq, Spectrum(grid));
    auto uidx = [d](int i, int j) {  // i <= j
        return i * d + j - i * (i + 1) / 2;
    };
    double acc_div = 0.0, acc_rel = 0.0, acc_v2 = 0.0;
    std::complex<double> fmode[8], Umode[64], vmode[8];
    for_each_mode(grid, [&](std::int64_t idx, const int* k, double w) {
        const std::complex<double> dh = Dh.c[idx];
        const std::complex<double> qh = spec.q_bar * dh;
        double k2 = 0.0;
        for (int ax = 0; ax < d; ++ax) k2 += double(k[ax]) * k[ax];
        for (int ax = 0; ax < d; ++ax) vmode[ax] = vh[ax].c[idx];
        if (k2 == 0.0) {
            for (int c = 0; c < nuniq; ++c) Uh[c].c[idx] = 0.0;
            return;
        }
        // f = B v - i k q' - i (Ubar k) dh
        for (int i = 0; i < d; ++i) {
            std::complex<double> f(0.0, 0.0);
            for (int j = 0; j < d; ++j) f += spec.B(i, j) * vmode[j];
            double Ubk = 0.0;
            for (int j = 0; j < d; ++j) Ubk += bar.U(i, j) * k[j];
            f -= std::complex<double>(0.0, 1.0) * (double(k[i]) * qh + Ubk * dh);
            fmode[i] = f;
        }
        antidiv_mode_solve(d, k, fmode, Umode);
        // Full U mode: Ubar dh + correction, trace removed.
        std::complex<double> tr(0.0, 0.0);
        for (int i = 0; i < d; ++i) tr += bar.U(i, i) * dh + Umode[i * d + i];
        for (int i = 0; i < d; ++i)
            for (int j = i; j < d; ++j) {
                std::complex<double> u = bar.U(i, j) * dh + Umode[i * d + j];
                if (i == j) u -= tr / double(d);
                Uh[uidx(i, j)].c[idx] = u;
            }
        // Residual accumulation: div v and div U + grad q - B v.
        std::complex<double> kdotv(0.0, 0.0);
        for (int ax = 0; ax < d; ++ax) kdotv += double(k[ax]) * vmode[ax];
        acc_div += w * std::norm(kdotv);
        for (int i = 0; i < d; ++i) {
            std::complex<double> Uk(0.0, 0.0);
            for (int j = 0; j < d; ++j) {
                const std::complex<double> uij =
                    Uh[uidx(std::min(i, j), std::max(i, j))].c[idx];
                Uk += double(k[j]) * uij;
            }
            std::complex<double> r =
                std::complex<double>(0.0, 1.0) * (Uk + double(k[i]) * qh);
            for (int j = 0; j < d; ++j) r -= spec.B(i, j) * vmode[j];
            acc_rel += w * std::norm(r);
        }
        for (int ax = 0; ax < d; ++ax) acc_v2 += w * std::norm(vmode[ax]);
    });

    LocalizedWave out;
    out.v = VectorField(grid, d);
    for (int ax = 0; ax < d; ++ax) out.v.comp[ax] = irfft(vh[ax]);
    vh.clear();
    out.U = MatrixField(grid);
    for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) {
            if (i == d - 1 && j == d - 1) continue;
            out.U.at(i, j) = irfft(Uh[uidx(i, j)]);
            if (i != j) out.U.at(j, i) = out.U.at(i, j);
        }
    {
        ScalarField last(grid);
        for (std::int64_t p = 0; p < N; ++p) {
            double tr = 0.0;
            for (int i = 0; i + 1 < d; ++i) tr += out.U.at(i, i)[p];
            last[p] = -tr;
        }
        out.U.at(d - 1, d - 1) = std::move(last);
    }
    {
        Spectrum qh(grid);
        for (std::int64_t i = 0; i < qh.size(); ++i) qh.c[i] = spec.q_bar * Dh.c[i];
        out.q = irfft(qh);
    }
    ScalarField D = irfft(Dh);

    // --- diagnostics ---
    WaveDiagnostics& dg = out.diag;
    dg.lambda = spec.lambda();
    dg.cutoff_delta_effective = delta_cut;
    const double l2v = std::sqrt(acc_v2);
    dg.residual_div_v = std::sqrt(acc_div) / std::max(lam_op * l2v, 1e-300);
    dg.residual_relaxed = std::sqrt(acc_rel) / std::max(bar.norm(), 1e-300);

    double mv = 0.0, mu = 0.0;
    for (int ax = 0; ax < d; ++ax) mv += std::pow(mean(out.v.comp[ax]), 2);
    for (const auto& c : out.U.comp) mu += std::pow(mean(c), 2);
    dg.mean_v = std::sqrt(mv);
    dg.mean_U = std::sqrt(mu);

    // Flattened segment data for the per-node loop: with w1 = center - mu2 bar
    // the offset of (center + w) from w1 is w + mu2 bar.
    const int ncomp = d + d * d;
    std::vector<double> barc(ncomp);
    for (int ax = 0; ax < d; ++ax) barc[ax] = bar.v(ax);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) barc[d + i * d + j] = bar.U(i, j);
    const double e2 = std::max(state_dot(bar, bar), 1e-300);
    std::vector<const double*> fields(ncomp);
    for (int ax = 0; ax < d; ++ax) fields[ax] = out.v.comp[ax].a.data();
    for (int c = 0; c < d * d; ++c) fields[d + c] = out.U.comp[c].a.data();

    double sup_seg = 0.0, sup_h0 = 0.0, tail_sup = 0.0;
    double mass_in = 0.0, mass_out = 0.0;
    std::vector<int> ix(d);
    std::vector<double> x(d);
    for (std::int64_t p = 0; p < N; ++p) {
        unflatten(grid, p, ix.data());
        for (int ax = 0; ax < d; ++ax) x[ax] = grid.coord(ax, ix[ax]);
        const bool inside = spec.region.contains(x);
        const double m = ladder.eval(0, phase_at(ix.data())) * phi[p];
        double err2 = 0.0, rel2 = 0.0, reldot = 0.0, tail2 = 0.0;
        for (int c = 0; c < ncomp; ++c) {
            const double wc = fields[c][p];
            err2 += (wc - barc[c] * m) * (wc - barc[c] * m);
            const double rc = wc + spec.mu2 * barc[c];
            rel2 += rc * rc;
            reldot += rc * barc[c];
            tail2 += (wc - barc[c] * D[p]) * (wc - barc[c] * D[p]);
        }
        sup_h0 = std::max(sup_h0, err2);
        if (inside) {
            const double t = std::clamp(reldot / e2, 0.0, 1.0);
            sup_seg = std::max(sup_seg, rel2 - 2.0 * t * reldot + t * t * e2);
            mass_in += D[p] * D[p];
        } else {
            mass_out += D[p] * D[p];
            tail_sup = std::max(tail_sup, tail2);
        }
    }
    dg.sup_segment_dist = std::sqrt(std::max(0.0, sup_seg));
    dg.sup_h0_error = std::sqrt(sup_h0);
    dg.primary_mass_outside = mass_out / std::max(mass_in + mass_out, 1e-300);
    dg.corr_tail_sup = std::sqrt(tail_sup);

    if (opt.keep_primary_profile) out.primary_profile = std::move(D);
    return out;
}

RegionStats region_stats(const LocalizedWave& wave, const WaveSpec& spec,
                         double eps) {
    const TorusGrid& grid = wave.v.grid;
    const int d = grid.dim();
    const StatePoint bar = spec.bar();
    const StatePoint ctr = spec.center();
    const double e2 = std::max(state_dot(bar, bar), 1e-300);
    RegionStats rs;
    rs.threshold = std::min(eps / 2.0, bar.norm() / 4.0);
    const double cellvol = grid.cell_volume();
    std::vector<int> ix(d);
    std::vector<double> x(d);
    StatePoint node = StatePoint::zero(d);
    for (std::int64_t p = 0; p < grid.total(); ++p) {
        unflatten(grid, p, ix.data());
        for (int ax = 0; ax < d; ++ax) x[ax] = grid.coord(ax, ix[ax]);
        if (!spec.region.contains(x)) continue;
        for (int ax = 0; ax < d; ++ax) node.v(ax) = wave.v.comp[ax][p];
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) node.U(i, j) = wave.U.at(i, j)[p];
        const StatePoint val = ctr + node;
        rs.sup_dist = std::max(rs.sup_dist, segment_dist(val, spec.w1, bar, e2));
        if ((val - spec.w1).norm() < rs.threshold) rs.vol1 += cellvol;
        if ((val - spec.w2).norm() < rs.threshold) rs.vol2 += cellvol;
    }
    return rs;
}

TileResult tile_unit_cube(const StatePoint& bar, int k, const TileOptions& opt) {
    const int d = bar.dim();
    if (k < 1) throw precondition_error("tile_unit_cube: k >= 1 required");
    const auto cone = in_wave_cone(bar, 1e-8);
    if (!cone) throw precondition_error("tile_unit_cube: direction not in the wave cone");

    // Integer lattice direction closest to xi, then re-project the state so
    // the cone conditions hold exactly for it.
    Eigen::VectorXi e(d);
    {
        double best = -2.0;
        std::vector<int> c(d, -4);
        while (true) {
            double len = 0.0, dot = 0.0;
            for (int i = 0; i < d; ++i) {
                len += double(c[i]) * c[i];
                dot += double(c[i]) * cone->xi(i);
            }
            if (len > 0.0) {
                const double a = std::abs(dot) / std::sqrt(len) - 1e-6 * len;
                if (a > best) {
                    best = a;
                    for (int i = 0; i < d; ++i) e(i) = (dot >= 0) ? c[i] : -c[i];
                }
            }
            int ax = 0;
            while (ax < d && ++c[ax] > 4) c[ax++] = -4;
            if (ax == d) break;
        }
        int g = 0;
        for (int i = 0; i < d; ++i) g = std::gcd(g, std::abs(e(i)));
        if (g > 1) e /= g;
    }
    const Vec xi = e.cast<double>().normalized();
    auto [dir, qb] = project_direction_to_cone(bar, xi);

    const int cells_per_axis = 1 << k;
    const int t = std::max(
        1, static_cast<int>(std::lround(opt.periods_per_cell * (1 << (k + 1)) /
                                        e.cast<double>().norm())));
    Eigen::VectorXi kappa = e * t;
    const double lambda = kappa.cast<double>().norm();
    int n = opt.grid_n;
    if (n == 0) {
        n = 64;
        while (n < 8.0 * lambda || n % (2 * cells_per_axis) != 0) n *= 2;
    }
    const TorusGrid grid(d, n);

    const double cell = opt.cube_side / cells_per_axis;
    Box box;
    box.lo.assign(d, 0.0);
    box.hi.assign(d, cell);

    WaveSpec spec;
    spec.w1 = dir * (-1.0);
    spec.w2 = dir;
    spec.mu1 = spec.mu2 = 0.5;
    spec.kappa = kappa;
    spec.q_bar = 2.0 * qb;
    spec.region = box;
    spec.delta = opt.delta;
    spec.B = (opt.B.size() == 0) ? Mat::Zero(d, d) : opt.B;

    LocalizedWave wave = build_localized_wave(spec, grid, {});

    // Replicate over the cube by node-exact periodic shifts.
    const std::int64_t N = grid.total();
    const int stride = static_cast<int>(std::lround(cell / grid.dx(0)));
    if (std::abs(stride * grid.dx(0) - cell) > 1e-12)
        throw resolution_error("tile_unit_cube: cells not node-aligned");

    TileResult out;
    out.epsilon = std::pow(2.0, -k * d) / k;
    out.v = VectorField(grid, d);
    out.U = MatrixField(grid);

    // Sum of complete translates over the cell lattice, applied spectrally:
    // node-aligned shifts are exact phase factors, and the lattice sum is a
    // per-axis geometric (Dirichlet) factor. The corrections carry global
    // tails, so every copy must contribute in full.
    std::vector<int> ix(d);
    auto tiled_sum = [&](const ScalarField& f) {
        Spectrum s = rfft(f);
        for_each_mode(grid, [&](std::int64_t idx, const int* k, double) {
            std::complex<double> m(1.0, 0.0);
            for (int ax = 0; ax < d; ++ax) {
                if ((static_cast<std::int64_t>(k[ax]) * stride) % grid.n[ax] == 0) {
                    m *= static_cast<double>(cells_per_axis);
                    continue;
                }
                const double theta = 2.0 * M_PI * k[ax] * stride / grid.n[ax];
                m *= (1.0 - std::polar(1.0, -theta * cells_per_axis)) /
                     (1.0 - std::polar(1.0, -theta));
            }
            s.c[idx] *= m;
        });
        return irfft(s);
    };
    for (int ax = 0; ax < d; ++ax) out.v.comp[ax] = tiled_sum(wave.v.comp[ax]);
    for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) {
            out.U.at(i, j) = tiled_sum(wave.U.at(i, j));
            if (i != j) out.U.at(j, i) = out.U.at(i, j);
        }

    // Statistics over the cube.
    const StatePoint seg_dir = dir * 2.0;  // [-dir, +dir]
    const double e2 = std::max(state_dot(seg_dir, seg_dir), 1e-300);
    double mass = 0.0, supd = 0.0;
    std::int64_t cube_nodes = 0;
    std::vector<double> x(d);
    StatePoint node = StatePoint::zero(d);
    for (std::int64_t p = 0; p < N; ++p) {
        unflatten(grid, p, ix.data());
        bool in_cube = true;
        for (int ax = 0; ax < d; ++ax) {
            x[ax] = grid.coord(ax, ix[ax]);
            if (x[ax] > opt.cube_side) in_cube = false;
        }
        if (!in_cube) continue;
        ++cube_nodes;
        double n2 = 0.0;
        for (int ax = 0; ax < d; ++ax) {
            node.v(ax) = out.v.comp[ax][p];
            n2 += node.v(ax) * node.v(ax);
        }
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
                node.U(i, j) = out.U.at(i, j)[p];
                n2 += node.U(i, j) * node.U(i, j);
            }
        mass += n2;
        supd = std::max(supd, segment_dist(node, dir * (-1.0), seg_dir, e2));
    }
    out.mass_on_cube = mass / std::max<std::int64_t>(cube_nodes, 1);
    out.sup_dist = supd;

    double mn = 0.0;
    for (int ax = 0; ax < d; ++ax) mn += std::pow(mean(out.v.comp[ax]), 2);
    for (const auto& c : out.U.comp) mn += std::pow(mean(c), 2);
    out.mean_norm = std::sqrt(mn);

    // Pairings against five fixed low-mode test functions.
    const std::int64_t Nn = grid.total();
    for (int fn = 0; fn < 5; ++fn) {
        double best = 0.0;
        std::vector<double> g(Nn);
        for (std::int64_t p = 0; p < Nn; ++p) {
            unflatten(grid, p, ix.data());
            const double x0 = grid.coord(0, ix[0]);
            const double x1 = (d > 1) ? grid.coord(1, ix[1]) : 0.0;
            switch (fn) {
                case 0: g[p] = std::sin(x0); break;
                case 1: g[p] = std::cos(x1); break;
                case 2: g[p] = std::sin(x0 + x1); break;
                case 3: g[p] = std::cos(2.0 * x0); break;
                default: g[p] = std::sin(x0) * std::cos(x1); break;
            }
        }
        auto pair_with = [&](const ScalarField& f) {
            double s = 0.0;
            for (std::int64_t p = 0; p < Nn; ++p) s += f[p] * g[p];
            return std::abs(s / Nn);
        };
        for (const auto& c : out.v.comp) best = std::max(best, pair_with(c));
        for (const auto& c : out.U.comp) best = std::max(best, pair_with(c));
        out.pairings.push_back(best);
        out.pairing_max = std::max(out.pairing_max, best);
    }
    return out;
}

}  // namespace pwforge
