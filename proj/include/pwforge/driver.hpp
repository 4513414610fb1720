#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pwforge/cutoff.hpp"
#include "pwforge/grid.hpp"
#include "pwforge/segment.hpp"
#include "pwforge/spectral.hpp"
#include "pwforge/state.hpp"
#include "pwforge/wave.hpp"

namespace pwforge {

enum class RunMode { periodic, compact };

/// Target kinetic-energy density e(x) > 0 (periodic) or compactly supported
/// e(x) >= 0 (compact mode).
struct EnergyProfile {
    enum class Kind { constant, cosine, compact_bump, grid };
    Kind kind = Kind::constant;
    double base = 1.0;          // constant / cosine
    std::vector<double> amps;   // cosine: e = base + sum_i amps[i] cos(x_i)
    Box support;                // compact bump
    double amplitude = 1.0;     // compact bump height
    double ramp_fraction = 0.25;
    ScalarField samples;        // grid kind

    double eval(const std::vector<double>& x) const;
    ScalarField sample(const TorusGrid& g) const;
};

struct BaseFlow {
    enum class Kind { zero, shear };
    Kind kind = Kind::zero;
    double amplitude = 1.0;
    int mode = 1;  // shear: v = (amplitude sin(mode x2), 0, ...)
};

struct SweepStep {
    int k_cells = 1;  // 2^k_cells cells per axis
    int lambda = 8;   // target oscillations per torus period
    double delta = 1.0 / 16;
};

struct Tolerances {
    double flow_residual = 1e-6;    // init_from_flow acceptance gate
    double global_residual = 1e-6;  // sweep abort threshold
    double member_tol = 1e-9;
};

struct RunConfig {
    int d = 2;
    std::vector<int> n;
    RunMode mode = RunMode::periodic;
    EnergyProfile energy;
    Mat B;
    BaseFlow base_flow;
    std::vector<SweepStep> schedule;
    double gamma = 0.9;           // fraction of the certified amplitude
    double deficit_floor = 1e-3;  // cells at or under this deficit are left alone
    double margin_floor = 1e-4;
    std::uint64_t seed = 1;
    HullParams hull;          // d = 2 membership certification
    SegmentConfig segment;    // segment search knobs
    int hull_check_nodes = 3; // d = 2: per-cell a-posteriori membership samples
    int weak_tests = 8;
    Tolerances tol;
    std::string output_dir = "out";

    TorusGrid grid() const { return TorusGrid(n); }
    void validate() const;
};

struct DiagnosticsRecord {
    int sweep = 0;
    double total_deficit = 0.0;  // integral of e - |v|^2
    double sup_deficit = 0.0;
    double residual_div_v = 0.0;
    double residual_relaxed = 0.0;
    double weak_residual = 0.0;
    double hminus1_to_v0 = 0.0;
    double l2_to_v0 = 0.0;
    double min_hull_margin = 0.0;  // over nodes with deficit above the floor
    double sup_v_sq = 0.0;         // max |v|^2 (a priori bound: <= max e)
    double min_U_eig = 0.0;        // min eigenvalue of U (a priori: >= -max e / d)
    double sup_outside_support = 0.0;  // compact mode: field leakage report
    double l2_change = 0.0;
    int cells_done = 0, cells_skipped = 0;
    double wall_time_s = 0.0;
};

struct IterationState {
    TorusGrid grid;
    VectorField v;
    MatrixField U;
    ScalarField q;
    ScalarField e;   // sampled energy profile
    VectorField v0;  // reference flow for distance diagnostics
    int sweep = 0;
    std::vector<DiagnosticsRecord> history;
};

struct FlowResiduals {
    double momentum = 0.0;
    double divergence = 0.0;
};

/// Starts from a stationary flow: U0 = v0 (x) v0 - (|v0|^2/d) I and
/// q0 = p0 + |v0|^2/d. Rejects base flows whose stationary residual exceeds
/// the gate, energy profiles that do not dominate |v0|^2, and (d = 2)
/// sampled states that fail relaxed-set certification.
IterationState init_from_flow(const VectorField& v0, const ScalarField& p0,
                              const RunConfig& cfg,
                              FlowResiduals* residuals = nullptr);

/// Compact mode start from the zero state (e must be compactly supported).
/// For d = 2 the membership of the zero state in the relaxed set is
/// certified constructively; failure aborts with a node report.
IterationState init_zero(const RunConfig& cfg);

/// One covering pass: partition into 2^{k_cells d} cells, find an admissible
/// segment at each active cell mean, add a localized wave scaled so the
/// state stays in the relaxed set (a-posteriori node checks with geometric
/// backoff), then rebuild the pressure from Delta q = div(Bv) - div div U.
DiagnosticsRecord sweep(IterationState& state, const RunConfig& cfg,
                        const SweepStep& step, int sweep_index);

/// Runs the full schedule. on_sweep, when given, observes each record as it
/// is produced.
IterationState run(const RunConfig& cfg,
                   const std::function<void(const DiagnosticsRecord&)>& on_sweep = {});

/// Max normalized weak-form residual of the velocity field against n_tests
/// random band-limited divergence-free vector tests and scalar tests.
double weak_residual(const VectorField& v, const Mat& B, int n_tests,
                     std::uint64_t seed);

struct AssembledSolution {
    VectorField v;
    ScalarField p;                     // q - e/d
    ScalarField constraint_violation;  // |U - (v (x) v - e/d I)|_F per node
    double violation_l1 = 0.0;
};

/// Final read-out: pressure p = q - e/d plus the pointwise constraint
/// violation field (finite sweeps never reach the constraint set exactly;
/// the violation is reported, not hidden).
AssembledSolution assemble_solution(const IterationState& state);

/// K^co margin at a grid node (fast closed forms for d = 2, 3).
double pointwise_margin(int d, const double* v, const double* U, double r);

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b);

}  // namespace pwforge
