#include "pwforge/commands.hpp"

#include <sys/stat.h>

#include <cstdio>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "pwforge/config.hpp"
#include "pwforge/driver.hpp"
#include "pwforge/field_io.hpp"

namespace pwforge {

namespace {

using nlohmann::json;

template <class F>
int guarded(F&& body) {
    try {
        return body();
    } catch (const io_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const config_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const precondition_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const resolution_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const infeasible_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const numeric_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
}

void ensure_dir(const std::string& dir) {
    if (dir.empty()) return;
    struct stat st{};
    if (stat(dir.c_str(), &st) == 0) {
        if (!S_ISDIR(st.st_mode)) throw io_error(dir + " exists and is not a directory");
        return;
    }
    if (mkdir(dir.c_str(), 0755) != 0) throw io_error("cannot create directory " + dir);
}

json record_to_json(const DiagnosticsRecord& r) {
    return json{{"record", "sweep"},
                {"sweep", r.sweep},
                {"total_deficit", r.total_deficit},
                {"sup_deficit", r.sup_deficit},
                {"residual_div_v", r.residual_div_v},
                {"residual_relaxed", r.residual_relaxed},
                {"weak_residual", r.weak_residual},
                {"hminus1_to_v0", r.hminus1_to_v0},
                {"l2_to_v0", r.l2_to_v0},
                {"min_hull_margin", r.min_hull_margin},
                {"sup_v_sq", r.sup_v_sq},
                {"min_U_eig", r.min_U_eig},
                {"sup_outside_support", r.sup_outside_support},
                {"l2_change", r.l2_change},
                {"cells_done", r.cells_done},
                {"cells_skipped", r.cells_skipped},
                {"wall_time_s", r.wall_time_s}};
}

}  // namespace

int cmd_gen_wave(const GenWaveArgs& args) {
    return guarded([&]() {
        WaveConfig wc = load_wave_config(args.config_path);
        if (args.lambda_override > 0) wc.lambda = args.lambda_override;
        if (!args.output_dir.empty()) wc.output_dir = args.output_dir;
        ensure_dir(wc.output_dir);

        const TorusGrid grid(wc.n);
        SegmentConfig scfg = wc.segment;
        scfg.hull = wc.hull;
        scfg.rng_seed = wc.seed;

        AdmissibleSegment seg;
        if (wc.d == 2) {
            seg = admissible_segment_2d(wc.center, wc.r, scfg, wc.lambda);
        } else {
            seg = admissible_segment(wc.center, wc.r, scfg);
            seg = align_segment_to_lattice(seg, wc.r, wc.lambda, scfg);
        }
        WaveSpec spec = WaveSpec::from_segment(seg, wc.region, wc.delta, wc.B);
        WaveBuildOptions opt;
        // A frequency-independent ramp keeps phi fixed across --lambda
        // overrides, so doubling comparisons measure only the decay.
        double min_side = wc.region.side(0);
        for (int ax = 1; ax < wc.d; ++ax)
            min_side = std::min(min_side, wc.region.side(ax));
        opt.ramp_width = min_side / 3.0;
        LocalizedWave wave = build_localized_wave(spec, grid, opt);
        const RegionStats rs = region_stats(wave, spec, 0.9 * spec.bar().norm());

        write_field(wc.output_dir + "/wave_v.pwfg", wave.v);
        write_field(wc.output_dir + "/wave_U.pwfg", wave.U);
        write_field(wc.output_dir + "/wave_q.pwfg", wave.q);

        json summary{{"record", "wave"},
                     {"lambda", wave.diag.lambda},
                     {"kappa", std::vector<int>(spec.kappa.data(),
                                                spec.kappa.data() + spec.kappa.size())},
                     {"sup_segment_dist", wave.diag.sup_segment_dist},
                     {"sup_h0_error", wave.diag.sup_h0_error},
                     {"residual_div_v", wave.diag.residual_div_v},
                     {"residual_relaxed", wave.diag.residual_relaxed},
                     {"mean_v", wave.diag.mean_v},
                     {"mean_U", wave.diag.mean_U},
                     {"vol1", rs.vol1},
                     {"vol2", rs.vol2},
                     {"region_volume", spec.region.volume()},
                     {"primary_mass_outside", wave.diag.primary_mass_outside},
                     {"corr_tail_sup", wave.diag.corr_tail_sup},
                     {"cutoff_delta_effective", wave.diag.cutoff_delta_effective},
                     {"files", {"wave_v.pwfg", "wave_U.pwfg", "wave_q.pwfg"}}};
        std::cout << summary.dump() << "\n";
        return 0;
    });
}

int cmd_run(const RunArgs& args) {
    return guarded([&]() {
        RunConfig cfg = load_run_config(args.config_path);
        if (args.seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(args.seed_override);
        if (!args.output_dir.empty()) cfg.output_dir = args.output_dir;
        ensure_dir(cfg.output_dir);

        std::ofstream diag(cfg.output_dir + "/diagnostics.jsonl", std::ios::trunc);
        if (!diag) throw io_error("cannot open diagnostics file");
        auto emit = [&](const DiagnosticsRecord& r) {
            const std::string line = record_to_json(r).dump();
            std::cout << line << "\n";
            diag << line << "\n";
        };
        IterationState st = run(cfg, emit);

        write_field(cfg.output_dir + "/v.pwfg", st.v);
        write_field(cfg.output_dir + "/U.pwfg", st.U);
        write_field(cfg.output_dir + "/q.pwfg", st.q);
        write_field(cfg.output_dir + "/e.pwfg", st.e);
        AssembledSolution sol = assemble_solution(st);
        write_field(cfg.output_dir + "/p.pwfg", sol.p);

        json fin{{"record", "final"},
                 {"sweeps", static_cast<int>(st.history.size()) - 1},
                 {"total_deficit", st.history.back().total_deficit},
                 {"weak_residual", st.history.back().weak_residual},
                 {"hminus1_to_v0", st.history.back().hminus1_to_v0},
                 {"constraint_violation_l1", sol.violation_l1},
                 {"output_dir", cfg.output_dir}};
        std::cout << fin.dump() << "\n";
        diag << fin.dump() << "\n";
        return 0;
    });
}

int cmd_check(const CheckArgs& args) {
    return guarded([&]() {
        RunConfig cfg = load_run_config(args.config_path);
        VectorField v = read_vector_field(args.v_path);
        if (v.grid != cfg.grid())
            throw config_error("check: field grid does not match the config");
        const double wres = weak_residual(v, cfg.B, cfg.weak_tests, cfg.seed);
        MatrixField J = jacobian(v);
        const double dres = l2norm(div(v)) / std::max(l2norm(J), 1e-300);

        json out{{"record", "check"},
                 {"weak_residual", wres},
                 {"residual_div_v", dres}};
        bool ok = wres <= 1e-6 && dres <= 1e-6;

        if (!args.U_path.empty() && !args.q_path.empty()) {
            MatrixField U = read_matrix_field(args.U_path);
            ScalarField q = read_scalar_field(args.q_path);
            VectorField R = div(U);
            VectorField gq = grad(q);
            const int d = v.grid.dim();
            VectorField Bv(v.grid, d);
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j)
                    for (std::int64_t p = 0; p < v.grid.total(); ++p)
                        Bv.comp[i][p] += cfg.B(i, j) * v.comp[j][p];
            const double den = l2norm(R) + l2norm(gq) + l2norm(Bv) + 1e-300;
            for (int c = 0; c < d; ++c)
                for (std::int64_t p = 0; p < v.grid.total(); ++p)
                    R.comp[c][p] += gq.comp[c][p] - Bv.comp[c][p];
            const double rres = l2norm(R) / den;
            out["residual_relaxed"] = rres;
            ok = ok && rres <= 1e-6;

            const ScalarField e = cfg.energy.sample(v.grid);
            double min_margin = std::numeric_limits<double>::infinity();
            double total_deficit = 0.0;
            std::vector<double> vb(d), Ub(static_cast<size_t>(d) * d);
            for (std::int64_t p = 0; p < v.grid.total(); ++p) {
                double v2 = 0.0;
                for (int c = 0; c < d; ++c) {
                    vb[c] = v.comp[c][p];
                    v2 += vb[c] * vb[c];
                }
                for (int c = 0; c < d * d; ++c) Ub[c] = U.comp[c][p];
                total_deficit += e[p] - v2;
                if (e[p] > cfg.deficit_floor)
                    min_margin = std::min(
                        min_margin, pointwise_margin(d, vb.data(), Ub.data(), e[p]));
            }
            out["total_deficit"] =
                total_deficit / v.grid.total() * v.grid.volume();
            out["min_hull_margin"] =
                min_margin == std::numeric_limits<double>::infinity() ? 0.0 : min_margin;
        }
        out["pass"] = ok;
        std::cout << out.dump() << "\n";
        return (args.strict && !ok) ? 4 : 0;
    });
}

int cmd_export_csv(const ExportCsvArgs& args) {
    return guarded([&]() {
        const FieldKind kind = peek_field_kind(args.field_path);
        TorusGrid grid;
        std::vector<const ScalarField*> comps;
        ScalarField s;
        VectorField v;
        MatrixField M;
        switch (kind) {
            case FieldKind::scalar:
                s = read_scalar_field(args.field_path);
                grid = s.grid;
                comps = {&s};
                break;
            case FieldKind::vector:
                v = read_vector_field(args.field_path);
                grid = v.grid;
                for (const auto& c : v.comp) comps.push_back(&c);
                break;
            case FieldKind::matrix:
                M = read_matrix_field(args.field_path);
                grid = M.grid;
                for (const auto& c : M.comp) comps.push_back(&c);
                break;
        }
        if (grid.total() == 0) throw io_error("empty field");
        const std::string out_path =
            args.csv_path.empty() ? args.field_path + ".csv" : args.csv_path;
        std::FILE* out = std::fopen(out_path.c_str(), "w");
        if (!out) throw io_error("cannot open " + out_path);
        const int d = grid.dim();
        // Header: coordinates, then components (matrix entries row-major).
        std::fprintf(out, "#");
        for (int ax = 0; ax < d; ++ax) std::fprintf(out, " x%d", ax);
        for (size_t c = 0; c < comps.size(); ++c)
            std::fprintf(out, " c%zu", c);
        std::fprintf(out, "\n");
        std::vector<int> ix(d);
        for (std::int64_t p = 0; p < grid.total(); ++p) {
            unflatten(grid, p, ix.data());
            for (int ax = 0; ax < d; ++ax)
                std::fprintf(out, ax ? ",%.17g" : "%.17g", grid.coord(ax, ix[ax]));
            for (const auto* c : comps) std::fprintf(out, ",%.17g", (*c)[p]);
            std::fprintf(out, "\n");
        }
        std::fclose(out);
        return 0;
    });
}

}  // namespace pwforge
