#include "pwforge/segment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace pwforge {

namespace {

constexpr double kGolden = 0.61803398874989484820;

int state_dim(int d) { return d + d * (d + 1) / 2 - 1; }  // N of the support bound

// Coordinates of a symmetric trace-free matrix: first d-1 diagonal entries,
// then the upper triangle.
void sym0_coords(const Mat& U, double* out) {
    const int d = static_cast<int>(U.rows());
    int k = 0;
    for (int i = 0; i < d - 1; ++i) out[k++] = U(i, i);
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j) out[k++] = U(i, j);
}

std::vector<Vec> sphere_mesh(int d, double r, int count, std::uint64_t seed) {
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double sr = std::sqrt(r);
    const double jitter = 1e-3 * sr;
    std::vector<Vec> pts;
    pts.reserve(count);
    for (int i = 0; i < count; ++i) {
        Vec v(d);
        if (d == 2) {
            const double th = 2.0 * M_PI * (i + 0.5) / count;
            v << std::cos(th), std::sin(th);
        } else if (d == 3) {
            const double z = 1.0 - 2.0 * (i + 0.5) / count;
            const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
            const double ph = 2.0 * M_PI * std::fmod(i * kGolden, 1.0);
            v << rho * std::cos(ph), rho * std::sin(ph), z;
        } else {
            for (int k = 0; k < d; ++k) v(k) = gauss(rng);
            v.normalize();
        }
        for (int k = 0; k < d; ++k) v(k) += jitter / sr * gauss(rng);
        v *= sr / v.norm();
        pts.push_back(std::move(v));
    }
    return pts;
}

// Phase-I simplex for A x = b, x >= 0 (b is made nonnegative by row flips).
// Returns true and fills x on feasibility; the solution is a basic feasible
// point, so its support has at most #rows nonzeros.
bool solve_feasibility(Mat A, Vec b, Vec& x) {
    const int m = static_cast<int>(A.rows());
    const int n = static_cast<int>(A.cols());
    for (int i = 0; i < m; ++i)
        if (b(i) < 0) {
            A.row(i) = -A.row(i);
            b(i) = -b(i);
        }
    Mat T(m, n + m + 1);
    T.leftCols(n) = A;
    T.block(0, n, m, m) = Mat::Identity(m, m);
    T.col(n + m) = b;
    std::vector<int> basis(m);
    for (int i = 0; i < m; ++i) basis[i] = n + i;
    // Phase-I objective row: w_j = sum_i T(i, j) over artificial-basic rows.
    Eigen::RowVectorXd w = T.colwise().sum();

    const double tol = 1e-11;
    const int max_iters = 50 * (m + n);
    for (int iter = 0; iter < max_iters; ++iter) {
        int enter = -1;
        for (int j = 0; j < n; ++j)  // Bland's rule: first improving column
            if (w(j) > tol) {
                enter = j;
                break;
            }
        if (enter < 0) break;
        int leave = -1;
        double best_ratio = 0.0;
        for (int i = 0; i < m; ++i) {
            if (T(i, enter) > tol) {
                const double ratio = T(i, n + m) / T(i, enter);
                if (leave < 0 || ratio < best_ratio - tol ||
                    (ratio < best_ratio + tol && basis[i] < basis[leave])) {
                    leave = i;
                    best_ratio = ratio;
                }
            }
        }
        if (leave < 0) return false;  // unbounded; cannot happen with sum row
        T.row(leave) /= T(leave, enter);
        for (int i = 0; i < m; ++i)
            if (i != leave && T(i, enter) != 0.0) T.row(i) -= T(i, enter) * T.row(leave);
        w -= w(enter) * T.row(leave);
        basis[leave] = enter;
    }
    double artificial_mass = 0.0;
    for (int i = 0; i < m; ++i)
        if (basis[i] >= n) artificial_mass += std::abs(T(i, n + m));
    if (artificial_mass > 1e-9 * std::max(1.0, b.norm())) return false;

    x = Vec::Zero(n);
    for (int i = 0; i < m; ++i)
        if (basis[i] < n) x(basis[i]) = std::max(0.0, T(i, n + m));
    return true;
}

// Drops support points beyond the Caratheodory bound by pivoting along null
// combinations of the active columns (the sum row keeps weights normalized).
void caratheodory_reduce(Mat cols, std::vector<int>& support, Vec& lambda,
                         int max_support) {
    while (static_cast<int>(support.size()) > max_support) {
        Mat S(cols.rows(), support.size());
        for (size_t j = 0; j < support.size(); ++j) S.col(j) = cols.col(support[j]);
        Eigen::FullPivLU<Mat> lu(S);
        if (lu.dimensionOfKernel() == 0) break;
        Vec mu = lu.kernel().col(0);
        double tau = std::numeric_limits<double>::infinity();
        int drop = -1;
        for (size_t j = 0; j < support.size(); ++j) {
            if (mu(j) > 1e-13) {
                const double t = lambda(support[j]) / mu(j);
                if (t < tau) {
                    tau = t;
                    drop = static_cast<int>(j);
                }
            }
        }
        if (drop < 0) {
            mu = -mu;
            for (size_t j = 0; j < support.size(); ++j) {
                if (mu(j) > 1e-13) {
                    const double t = lambda(support[j]) / mu(j);
                    if (t < tau) {
                        tau = t;
                        drop = static_cast<int>(j);
                    }
                }
            }
        }
        if (drop < 0) break;
        for (size_t j = 0; j < support.size(); ++j)
            lambda(support[j]) = std::max(0.0, lambda(support[j]) - tau * mu(j));
        lambda(support[drop]) = 0.0;
        support.erase(support.begin() + drop);
    }
}

// Largest s in (0, 1] with both endpoint margins >= half the center margin.
// The margin is concave along the segment, so the feasible set is an
// interval containing 0 and bisection applies.
double margin_shrink(const StatePoint& w, const StatePoint& dir, double r,
                     double half_target, int iters) {
    auto ok = [&](double s) {
        return std::min(hull_margin(w + dir * s, r), hull_margin(w - dir * s, r)) >=
               half_target;
    };
    if (ok(1.0)) return 1.0;
    double lo = 0.0, hi = 1.0;
    for (int i = 0; i < iters; ++i) {
        const double mid = 0.5 * (lo + hi);
        (ok(mid) ? lo : hi) = mid;
    }
    return lo;
}

}  // namespace

StatePoint CaratheodoryDecomposition::combine() const {
    StatePoint acc = StatePoint::zero(points.at(0).dim());
    for (size_t i = 0; i < points.size(); ++i) acc += points[i] * weights[i];
    return acc;
}

void validate_segment(const AdmissibleSegment& seg, double r, double tol) {
    const StatePoint& d = seg.direction;
    if (d.v.norm() == 0.0) throw numeric_error("segment: zero velocity direction");
    if (std::abs(seg.wave_vector.norm() - 1.0) > tol)
        throw numeric_error("segment: xi not unit");
    const double scale = std::max(1.0, d.norm());
    if ((d.U * seg.wave_vector + seg.q_bar * seg.wave_vector).norm() > tol * scale)
        throw numeric_error("segment: U xi + q xi residual too large");
    if (std::abs(d.v.dot(seg.wave_vector)) > tol * scale)
        throw numeric_error("segment: v . xi residual too large");
    const double half = 0.5 * hull_margin(seg.center, r);
    for (int s : {-1, 1})
        if (hull_margin(seg.endpoint(s), r) < half - tol)
            throw numeric_error("segment: endpoint margin below half center margin");
}

CaratheodoryDecomposition decompose(const StatePoint& w, double r,
                                    int sphere_resolution, std::uint64_t rng_seed) {
    w.validate();
    if (in_K(w, r, kMemberTol)) {
        CaratheodoryDecomposition out;
        out.points = {w};
        out.weights = {1.0};
        return out;
    }
    if (!(hull_margin(w, r) > 0.0))
        throw precondition_error("decompose: state not interior to K_r^co");

    const int d = w.dim();
    auto vels = sphere_mesh(d, r, sphere_resolution, rng_seed);
    // Genericity: candidate pairs with v_i = +-v_j are thinned out.
    std::vector<Vec> kept;
    for (const auto& v : vels) {
        bool dup = false;
        for (const auto& u : kept)
            if ((u - v).norm() < 1e-9 || (u + v).norm() < 1e-9) {
                dup = true;
                break;
            }
        if (!dup) kept.push_back(v);
    }

    const int rows = state_dim(d) + 1;
    const int M = static_cast<int>(kept.size());
    Mat A(rows, M);
    Vec b(rows);
    std::vector<double> coords(rows);
    for (int j = 0; j < M; ++j) {
        const StatePoint wj = lift_to_K(kept[j], r);
        A.block(0, j, d, 1) = wj.v;
        sym0_coords(wj.U, coords.data());
        for (int k = 0; k < rows - 1 - d; ++k) A(d + k, j) = coords[k];
        A(rows - 1, j) = 1.0;
    }
    b.head(d) = w.v;
    sym0_coords(w.U, coords.data());
    for (int k = 0; k < rows - 1 - d; ++k) b(d + k) = coords[k];
    b(rows - 1) = 1.0;

    Vec lambda;
    if (!solve_feasibility(A, b, lambda))
        throw infeasible_error("decompose: resolution too coarse");

    std::vector<int> support;
    for (int j = 0; j < M; ++j)
        if (lambda(j) > 1e-12) support.push_back(j);
    caratheodory_reduce(A, support, lambda, state_dim(d) + 1);

    CaratheodoryDecomposition out;
    double total = 0.0;
    for (int j : support) total += lambda(j);
    for (int j : support) {
        out.points.push_back(lift_to_K(kept[j], r));
        out.weights.push_back(lambda(j) / total);
    }
    out.reconstruction_error = (out.combine() - w).norm();
    return out;
}

Vec wave_vector_d3(const Vec& a, const Vec& b) {
    const int d = static_cast<int>(a.size());
    if (d < 3) throw precondition_error("wave_vector_d3: d >= 3 required");
    Mat M(2, d);
    M.row(0) = a.transpose();
    M.row(1) = b.transpose();
    Eigen::FullPivLU<Mat> lu(M);
    lu.setThreshold(1e-12);
    Mat ker = lu.kernel();
    if (ker.cols() == 0 || ker.col(0).norm() == 0.0)
        throw numeric_error("wave_vector_d3: no orthogonal direction found");
    return ker.col(0).normalized();
}

AdmissibleSegment admissible_segment(const StatePoint& w, double r,
                                     const SegmentConfig& cfg) {
    if (w.dim() < 3)
        throw precondition_error("admissible_segment: d >= 3 (use the 2-D search)");
    const double margin = hull_margin(w, r);
    if (!(margin > 0.0))
        throw precondition_error("admissible_segment: state not interior");

    CaratheodoryDecomposition dec;
    int res = cfg.sphere_resolution;
    for (int attempt = 0;; ++attempt) {
        try {
            dec = decompose(w, r, res, cfg.rng_seed + attempt);
            break;
        } catch (const infeasible_error&) {
            if (attempt >= cfg.max_resolution_doublings) throw;
            res *= 2;
        }
    }

    std::vector<int> order(dec.points.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return dec.weights[a] > dec.weights[b]; });
    const int i1 = order[0];
    int jbest = -1;
    double best = -1.0;
    for (size_t k = 1; k < order.size(); ++k) {
        const int j = order[k];
        const double travel =
            dec.weights[j] * (dec.points[j].v - dec.points[i1].v).norm();
        if (travel > best) {
            best = travel;
            jbest = j;
        }
    }
    if (jbest < 0)
        throw infeasible_error("admissible_segment: decomposition has one point");

    AdmissibleSegment seg;
    seg.center = w;
    seg.direction = (dec.points[jbest] - dec.points[i1]) * (0.5 * dec.weights[jbest]);
    const double s =
        margin_shrink(w, seg.direction, r, 0.5 * margin, cfg.bisect_iters);
    seg.direction = seg.direction * s;
    seg.wave_vector = wave_vector_d3(dec.points[i1].v, dec.points[jbest].v);
    seg.q_bar = 0.0;
    seg.margin = margin;
    seg.measured_ratio = seg.direction.v.norm() / energy_deficit(w, r);
    validate_segment(seg, r, cfg.cone_tol);
    return seg;
}

namespace {

// Integer wave vectors with |kappa| near lambda, one per direction (the
// representative with length closest to lambda), ordered by that closeness.
std::vector<Eigen::Vector2i> lattice_catalog_2d(int lambda, int max_dirs) {
    const int lo = std::max(1, static_cast<int>(std::floor(0.7 * lambda)));
    const int hi = static_cast<int>(std::ceil(1.42 * lambda));
    std::vector<std::pair<double, Eigen::Vector2i>> scored;
    for (int p = -hi; p <= hi; ++p) {
        for (int q = 0; q <= hi; ++q) {
            if (q == 0 && p <= 0) continue;
            const double len = std::hypot(p, q);
            if (len < lo || len > hi) continue;
            const double score = std::abs(len - lambda);
            bool handled = false;  // dedupe parallel directions
            for (auto& s : scored) {
                if (s.second.x() * q == s.second.y() * p) {
                    if (score < s.first) s = {score, {p, q}};
                    handled = true;
                    break;
                }
            }
            if (!handled) scored.push_back({score, {p, q}});
        }
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        return a.first < b.first ||
               (a.first == b.first && (a.second.x() < b.second.x() ||
                                       (a.second.x() == b.second.x() &&
                                        a.second.y() < b.second.y())));
    });
    std::vector<Eigen::Vector2i> cat;
    for (const auto& s : scored) {
        cat.push_back(s.second);
        if (static_cast<int>(cat.size()) >= max_dirs) break;
    }
    return cat;
}

std::vector<LaminationDir> dirs_for_kappa(const Eigen::Vector2i& kappa) {
    const double alpha = std::atan2(double(kappa.y()), double(kappa.x())) + M_PI / 2;
    std::vector<LaminationDir> out;
    for (int j = 0; j < 8; ++j) {
        const double beta = (-0.5 + (j + 0.5) / 8.0) * M_PI;
        out.push_back(LaminationDir{std::polar(std::cos(beta), alpha),
                                    std::polar(std::sin(beta), 2.0 * alpha)});
    }
    return out;
}

}  // namespace

AdmissibleSegment admissible_segment_2d(const StatePoint& w, double r,
                                        const SegmentConfig& cfg,
                                        int target_lambda) {
    if (w.dim() != 2) throw precondition_error("admissible_segment_2d: d = 2 only");
    const double margin = hull_margin(w, r);
    if (!(margin > 0.0))
        throw precondition_error("admissible_segment_2d: state not interior");

    std::vector<LaminationDir> top;
    std::vector<Eigen::Vector2i> kappas;
    if (target_lambda > 0) {
        for (const auto& k : lattice_catalog_2d(target_lambda, cfg.lattice_dirs)) {
            for (const auto& d : dirs_for_kappa(k)) {
                top.push_back(d);
                kappas.push_back(k);
            }
        }
    }

    const auto witness = hull_witness(w, r, cfg.hull, top);
    if (!witness) throw infeasible_error("admissible_segment_2d: hull too thin here");

    // The witness lives in r = 1 coordinates; velocity parts scale by sqrt(r)
    // and matrix parts by r.
    const StatePoint dphys = from_complex(
        ComplexState{witness->dir.z * std::sqrt(r), witness->dir.zeta * r});
    const double half = std::min(witness->t_plus, witness->t_minus);
    StatePoint dir = dphys * half;
    const double s = margin_shrink(w, dir, r, 0.5 * margin, cfg.bisect_iters);
    dir = dir * s;
    // The shrunk endpoints stay on the witness segment, hence in the hull.

    AdmissibleSegment seg;
    seg.center = w;
    seg.direction = dir;
    const double vn = dir.v.norm();
    if (vn == 0.0) throw numeric_error("admissible_segment_2d: degenerate direction");
    seg.wave_vector = Vec(2);
    seg.wave_vector << -dir.v(1) / vn, dir.v(0) / vn;
    seg.q_bar = -seg.wave_vector.dot(dir.U * seg.wave_vector);
    seg.margin = margin;
    seg.measured_ratio = vn / energy_deficit(w, r);

    if (!top.empty()) {
        // Identify which catalog direction the witness came from and record
        // kappa with the sign matching xi.
        for (size_t i = 0; i < top.size(); ++i) {
            if (std::abs(top[i].z - witness->dir.z) < 1e-14 &&
                std::abs(top[i].zeta - witness->dir.zeta) < 1e-14) {
                Eigen::Vector2i k = kappas[i];
                Vec kv(2);
                kv << k.x(), k.y();
                if (kv.dot(seg.wave_vector) < 0) k = -k;
                seg.kappa = Eigen::VectorXi(2);
                seg.kappa << k.x(), k.y();
                // xi is made exactly parallel to kappa.
                kv << seg.kappa(0), seg.kappa(1);
                seg.wave_vector = kv.normalized();
                break;
            }
        }
    }
    validate_segment(seg, r, cfg.cone_tol);
    return seg;
}

std::pair<StatePoint, double> project_direction_to_cone(const StatePoint& dir,
                                                        const Vec& xi) {
    Vec vbar = dir.v - dir.v.dot(xi) * xi;
    const double qbar = -xi.dot(dir.U * xi);
    Vec rho = dir.U * xi + qbar * xi;
    Mat Ubar = dir.U - (rho * xi.transpose() + xi * rho.transpose());
    return {StatePoint(std::move(vbar), std::move(Ubar)), qbar};
}

AdmissibleSegment align_segment_to_lattice(const AdmissibleSegment& seg, double r,
                                           int target_lambda,
                                           const SegmentConfig& cfg) {
    const int d = seg.center.dim();
    if (d < 3)
        throw precondition_error("align_segment_to_lattice: d >= 3 only");
    const Vec xi0 = seg.wave_vector;
    Eigen::VectorXi base(d);
    for (int i = 0; i < d; ++i) base(i) = static_cast<int>(std::lround(target_lambda * xi0(i)));

    Eigen::VectorXi best_kappa;
    double best_score = -2.0;
    const int offs[3] = {-1, 0, 1};
    int combos = 1;
    for (int i = 0; i < d; ++i) combos *= 3;
    for (int c = 0; c < combos; ++c) {
        Eigen::VectorXi k = base;
        int cc = c;
        for (int i = 0; i < d; ++i) {
            k(i) += offs[cc % 3];
            cc /= 3;
        }
        const double len = k.cast<double>().norm();
        if (len == 0.0) continue;
        const double align = k.cast<double>().dot(xi0) / len;
        const double score =
            std::abs(align) - 1e-3 * std::abs(len - target_lambda) / target_lambda;
        if (score > best_score) {
            best_score = score;
            if (align < 0) k = -k;
            best_kappa = k;
        }
    }
    if (best_kappa.size() == 0)
        throw numeric_error("align_segment_to_lattice: no integer direction");

    const Vec xi = best_kappa.cast<double>().normalized();
    AdmissibleSegment out = seg;
    auto [proj, qbar] = project_direction_to_cone(seg.direction, xi);
    if (proj.v.norm() < 1e-12 * std::max(1.0, seg.direction.norm()))
        throw infeasible_error("align_segment_to_lattice: direction degenerates");
    out.direction = std::move(proj);
    const double s = margin_shrink(seg.center, out.direction, r,
                                   0.5 * seg.margin, cfg.bisect_iters);
    out.direction = out.direction * s;
    out.wave_vector = xi;
    out.q_bar = qbar;
    out.kappa = best_kappa;
    out.measured_ratio = out.direction.v.norm() / energy_deficit(seg.center, r);
    validate_segment(out, r, cfg.cone_tol);
    return out;
}

}  // namespace pwforge
