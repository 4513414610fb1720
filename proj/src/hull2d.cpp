#include "pwforge/hull2d.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pwforge {

namespace {

constexpr double kGolden = 0.61803398874989484820;
constexpr int kBetaCount = 8;
constexpr double kTMax = 2.0;  // step-length scale in r = 1 units

// Hot-loop state representation in complex coordinates at r = 1.
struct Z2 {
    std::complex<double> z;
    std::complex<double> zeta;
};

Z2 normalize(const StatePoint& w, double r) {
    const ComplexState c = to_complex(w);
    const double sr = std::sqrt(r);
    return Z2{c.z / sr, c.zeta / r};
}

double vdc(int i, int base) {
    double f = 1.0, x = 0.0;
    while (i > 0) {
        f /= base;
        x += f * (i % base);
        i /= base;
    }
    return x;
}

// K_1^co margin of a normalized state: 1/2 - lambda_max(v (x) v - U).
double margin1(const Z2& w) {
    const double v0 = w.z.real(), v1 = w.z.imag();
    const double c = w.zeta.real(), d = w.zeta.imag();
    const double a11 = v0 * v0 - c;
    const double a22 = v1 * v1 + c;
    const double a12 = v0 * v1 - d;
    const double h = 0.5 * (a11 - a22);
    return 0.5 - (0.5 * (a11 + a22) + std::hypot(h, a12));
}

// Base-set test at r = 1. A state (z, zeta) is a rotated slice point
// (z0 e^{i theta}, c e^{2 i theta}) with c real; the two preimages are
// checked against 0 < |c| < 1/2 and the gauge f_1 < 1, with clearance eta.
bool base1(const Z2& w, double eta) {
    const double cz = std::abs(w.zeta);
    if (cz <= eta) return false;              // c = 0 excluded from the base set
    if (cz >= 0.5 - eta) return false;
    const double psi = std::arg(w.zeta);
    for (int s = 0; s < 2; ++s) {
        const double theta = 0.5 * (psi + s * M_PI);
        const std::complex<double> z0 = w.z * std::polar(1.0, -theta);
        const double c = (s == 0) ? cz : -cz;
        const double f = std::abs(z0.real()) / (0.5 + c) +
                         std::abs(z0.imag()) / (0.5 - c);
        if (f < 1.0 - eta) return true;
    }
    return false;
}

Z2 dir_z2(const LaminationDir& d) { return Z2{d.z, d.zeta}; }

Z2 step(const Z2& w, const Z2& d, double t) {
    return Z2{w.z + t * d.z, w.zeta + t * d.zeta};
}

// Membership in the depth-limited hull, normalized coordinates.
bool member1(const Z2& w, const HullParams& hp, int depth) {
    if (base1(w, hp.interior_margin)) return true;
    if (depth <= 0) return false;
    if (margin1(w) <= 0.0) return false;  // hull is contained in K_1^co
    for (int m = 0; m < hp.n_dirs; ++m) {
        const Z2 d = dir_z2(lamination_dir_sequence(m));
        for (int p = 0; p < hp.n_samples; ++p) {
            const auto [tp, tm] = step_pair_sequence(p, kTMax);
            const Z2 wp = step(w, d, tp);
            if (margin1(wp) <= 0.0) continue;
            const Z2 wm = step(w, d, -tm);
            if (margin1(wm) <= 0.0) continue;
            if (member1(wp, hp, depth - 1) && member1(wm, hp, depth - 1))
                return true;
        }
    }
    return false;
}

}  // namespace

StatePoint dir_to_state(const LaminationDir& d) {
    return from_complex(ComplexState{d.z, d.zeta});
}

bool in_base_set_2d(const StatePoint& w, double r, double interior_margin) {
    if (w.dim() != 2) throw precondition_error("base set: d = 2 only");
    if (!(r > 0.0)) throw precondition_error("base set: r > 0 required");
    return base1(normalize(w, r), interior_margin);
}

LaminationDir lamination_dir_sequence(int m) {
    const int i = m / kBetaCount;
    const int j = m % kBetaCount;
    const double alpha = std::fmod(i * kGolden, 1.0) * M_PI;
    const double beta = (-0.5 + (j + 0.5) / kBetaCount) * M_PI;
    return LaminationDir{std::polar(std::cos(beta), alpha),
                         std::polar(std::sin(beta), 2.0 * alpha)};
}

std::pair<double, double> step_pair_sequence(int m, double t_max) {
    if (m % 2 == 0) {
        const double t = t_max * vdc(m / 2 + 1, 2);
        return {t, t};
    }
    const int i = (m - 1) / 2;
    const double s = t_max * vdc(i + 1, 2);
    const double u = 0.15 + 0.7 * vdc(i + 1, 3);
    return {s * u, s * (1.0 - u)};
}

std::optional<HullWitness> hull_witness(const StatePoint& w, double r,
                                        const HullParams& hp,
                                        const std::vector<LaminationDir>& top_dirs) {
    if (w.dim() != 2) throw precondition_error("hull_witness: d = 2 only");
    if (!(r > 0.0)) throw precondition_error("hull_witness: r > 0 required");
    if (hp.depth < 1) throw precondition_error("hull_witness: depth >= 1 required");
    const Z2 wn = normalize(w, r);
    if (margin1(wn) <= 0.0) return std::nullopt;

    const bool pick_best = !top_dirs.empty();
    const int ndir = pick_best ? static_cast<int>(top_dirs.size()) : hp.n_dirs;

    // In best-pick mode long symmetric pairs are tried first so the first hit
    // per direction is near its admissible maximum.
    std::vector<int> pair_order(hp.n_samples);
    std::iota(pair_order.begin(), pair_order.end(), 0);
    if (pick_best) {
        std::sort(pair_order.begin(), pair_order.end(), [&](int a, int b) {
            const auto pa = step_pair_sequence(a, kTMax);
            const auto pb = step_pair_sequence(b, kTMax);
            return std::min(pa.first, pa.second) > std::min(pb.first, pb.second);
        });
    }

    std::optional<HullWitness> best;
    double best_score = 0.0;
    for (int m = 0; m < ndir; ++m) {
        const LaminationDir dir =
            pick_best ? top_dirs[m] : lamination_dir_sequence(m);
        const Z2 d = dir_z2(dir);
        for (int pi = 0; pi < hp.n_samples; ++pi) {
            const int p = pair_order[pi];
            const auto [tp, tm] = step_pair_sequence(p, kTMax);
            // |dir.z| <= 1, so pairs shorter than the best score cannot win.
            if (pick_best && std::min(tp, tm) <= best_score) continue;
            const Z2 wp = step(wn, d, tp);
            if (margin1(wp) <= 0.0) continue;
            const Z2 wm = step(wn, d, -tm);
            if (margin1(wm) <= 0.0) continue;
            if (member1(wp, hp, hp.depth - 1) && member1(wm, hp, hp.depth - 1)) {
                HullWitness cert{dir, tp, tm, hp.depth};
                if (!pick_best) return cert;
                // Rank by velocity travel: long segments with a strong
                // velocity component make the most useful oscillations.
                const double score = std::min(tp, tm) * std::abs(dir.z);
                if (score > best_score) {
                    best_score = score;
                    best = cert;
                }
                break;  // longer pairs for this direction were already tried
            }
        }
    }
    return best;
}

}  // namespace pwforge
