#include <doctest.h>

#include <cmath>
#include <random>

#include "pwforge/segment.hpp"

using namespace pwforge;

namespace {

Vec vecn(std::initializer_list<double> xs) {
    Vec v(static_cast<int>(xs.size()));
    int i = 0;
    for (double x : xs) v(i++) = x;
    return v;
}

// Random state strictly inside K_r^co: a convex mixture of lifted sphere
// points pulled toward the center.
StatePoint random_interior(int d, double r, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const int m = 2 * d + 2;
    StatePoint acc = StatePoint::zero(d);
    double wsum = 0.0;
    for (int i = 0; i < m; ++i) {
        Vec v(d);
        for (int k = 0; k < d; ++k) v(k) = gauss(rng);
        v *= std::sqrt(r) / v.norm();
        const double w = u(rng) + 0.05;
        acc += lift_to_K(v, r) * w;
        wsum += w;
    }
    acc = acc * (1.0 / wsum);
    return acc * (0.6 + 0.3 * u(rng));  // pull inward
}

}  // namespace

TEST_SUITE("segment") {

TEST_CASE("hand-checked mixture of axis states reconstructs zero") {
    // Quarter weights on +-e1, +-e2 average to the zero state.
    StatePoint acc = StatePoint::zero(2);
    for (auto v : {vecn({1, 0}), vecn({-1, 0}), vecn({0, 1}), vecn({0, -1})})
        acc += lift_to_K(v, 1.0) * 0.25;
    CHECK(acc.norm() < 1e-15);
}

TEST_CASE("decompose the zero state, d = 2") {
    const auto dec = decompose(StatePoint::zero(2), 1.0, 64, 3);
    CHECK(dec.reconstruction_error < 1e-8);
    CHECK(dec.points.size() <= 5);  // N + 1 with N = d(d+3)/2 - 1 = 4
    double sum = 0.0;
    for (double w : dec.weights) {
        CHECK(w > 0.0);
        sum += w;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    for (const auto& p : dec.points) CHECK(in_K(p, 1.0, 1e-9));
}

TEST_CASE("a state on K is its own decomposition") {
    const StatePoint w = lift_to_K(vecn({0.6, -0.8}), 1.0);
    const auto dec = decompose(w, 1.0, 64, 1);
    CHECK(dec.points.size() == 1);
    CHECK(dec.weights[0] == doctest::Approx(1.0));
    CHECK(dec.reconstruction_error < 1e-12);
}

TEST_CASE("decompose requires interior states") {
    const StatePoint outside(vecn({2, 0}), Mat::Zero(2, 2));
    CHECK_THROWS_AS(decompose(outside, 1.0, 64, 1), precondition_error);
}

TEST_CASE("decompose random interior states, d = 2 and 3") {
    std::mt19937_64 rng(17);
    for (int d : {2, 3}) {
        const int bound = d + d * (d + 1) / 2;  // N + 1
        for (int t = 0; t < 50; ++t) {
            const StatePoint w = random_interior(d, 1.0, rng);
            if (hull_margin(w, 1.0) < 1e-3) continue;
            const auto dec = decompose(w, 1.0, d == 2 ? 96 : 200, t);
            CHECK(dec.reconstruction_error < 1e-8);
            CHECK(static_cast<int>(dec.points.size()) <= bound);
        }
    }
}

TEST_CASE("wave_vector_d3") {
    const Vec xi = wave_vector_d3(vecn({1, 0, 0}), vecn({0, 1, 0}));
    CHECK(std::abs(std::abs(xi(2)) - 1.0) < 1e-12);

    const Vec xi2 = wave_vector_d3(vecn({1, 0, 0}), vecn({1, 0, 0}));
    CHECK(std::abs(xi2.norm() - 1.0) < 1e-12);
    CHECK(std::abs(xi2.dot(vecn({1, 0, 0}))) < 1e-12);

    const double h = std::sqrt(0.5);
    const Vec xi3 = wave_vector_d3(vecn({h, h, 0}), vecn({h, -h, 0}));
    CHECK(std::abs(std::abs(xi3(2)) - 1.0) < 1e-10);

    CHECK_THROWS_AS(wave_vector_d3(vecn({1, 0}), vecn({0, 1})), precondition_error);
}

TEST_CASE("admissible segment at the zero state, d = 3") {
    const StatePoint w = StatePoint::zero(3);
    const auto seg = admissible_segment(w, 1.0);
    validate_segment(seg, 1.0);
    CHECK(seg.direction.v.norm() > 0.0);
    CHECK(seg.margin == doctest::Approx(1.0 / 3));
    // Both endpoint margins at least half the center margin.
    for (int s : {-1, 1})
        CHECK(hull_margin(seg.endpoint(s), 1.0) >= 0.5 * seg.margin - 1e-12);
    CHECK(seg.measured_ratio > 0.0);
}

TEST_CASE("admissible segment near a two-point midpoint, d = 3") {
    const Vec a = vecn({1, 0, 0}), b = vecn({0, 1, 0});
    // The exact midpoint lies on an edge of the hull (margin 0); pulling it
    // toward the origin makes it interior.
    const StatePoint w = (lift_to_K(a, 1.0) + lift_to_K(b, 1.0)) * (0.5 * 0.9);
    REQUIRE(hull_margin(w, 1.0) > 0.0);
    const auto seg = admissible_segment(w, 1.0);
    validate_segment(seg, 1.0);
    // The two-point wave vector for this pair is the remaining axis.
    CHECK(std::abs(std::abs(wave_vector_d3(a, b)(2)) - 1.0) < 1e-12);
}

TEST_CASE("admissible segment rejects boundary states") {
    const StatePoint onK = lift_to_K(vecn({1, 0, 0}), 1.0);
    CHECK_THROWS_AS(admissible_segment(onK, 1.0), precondition_error);
}

TEST_CASE("segments on random interior states, d = 3") {
    std::mt19937_64 rng(29);
    SegmentConfig cfg;
    cfg.sphere_resolution = 200;
    double min_ratio = std::numeric_limits<double>::infinity();
    for (int t = 0; t < 40; ++t) {
        const StatePoint w = random_interior(3, 1.0, rng);
        if (hull_margin(w, 1.0) < 5e-3) continue;
        cfg.rng_seed = t;
        const auto seg = admissible_segment(w, 1.0, cfg);
        validate_segment(seg, 1.0, 1e-9);
        min_ratio = std::min(min_ratio, seg.measured_ratio);
    }
    CHECK(min_ratio > 0.0);  // the empirical direction-length constant
    MESSAGE("empirical min |v_bar| / deficit (d=3): ", min_ratio);
}

TEST_CASE("admissible segment 2d at the zero state") {
    const auto seg = admissible_segment_2d(StatePoint::zero(2), 1.0);
    validate_segment(seg, 1.0);
    CHECK(seg.direction.v.norm() > 0.0);
    CHECK(std::abs(seg.wave_vector.norm() - 1.0) < 1e-12);
}

TEST_CASE("admissible segment 2d shortens near the constraint set") {
    // A state close to K_1 admits only short segments.
    SegmentConfig cfg;
    const auto seg0 = admissible_segment_2d(StatePoint::zero(2), 1.0, cfg);
    const StatePoint nearK = lift_to_K(vecn({0.95, 0}), 1.0) * 0.97;
    if (in_relaxed(nearK, 1.0, cfg.hull)) {
        const auto seg1 = admissible_segment_2d(nearK, 1.0, cfg);
        validate_segment(seg1, 1.0);
        CHECK(seg1.direction.norm() < seg0.direction.norm());
    }
}

TEST_CASE("admissible segment 2d rejects exterior states") {
    const StatePoint outside(vecn({1.5, 0}), Mat::Zero(2, 2));
    CHECK_THROWS_AS(admissible_segment_2d(outside, 1.0), precondition_error);
}

TEST_CASE("lattice-aligned 2d segments carry integer wave vectors") {
    const int lambda = 8;
    const auto seg = admissible_segment_2d(StatePoint::zero(2), 1.0, {}, lambda);
    validate_segment(seg, 1.0);
    REQUIRE(seg.kappa.size() == 2);
    const double len = seg.kappa.cast<double>().norm();
    CHECK(len >= 0.7 * lambda);
    CHECK(len <= 1.45 * lambda);
    // xi exactly parallel to kappa.
    const Vec kn = seg.kappa.cast<double>().normalized();
    CHECK((kn - seg.wave_vector).norm() < 1e-12);
}

TEST_CASE("lattice alignment for d = 3 segments") {
    std::mt19937_64 rng(37);
    for (int t = 0; t < 10; ++t) {
        const StatePoint w = random_interior(3, 1.0, rng);
        if (hull_margin(w, 1.0) < 5e-3) continue;
        SegmentConfig cfg;
        cfg.rng_seed = 100 + t;
        const auto seg = admissible_segment(w, 1.0, cfg);
        const auto al = align_segment_to_lattice(seg, 1.0, 16, cfg);
        validate_segment(al, 1.0, 1e-9);
        REQUIRE(al.kappa.size() == 3);
        const Vec kn = al.kappa.cast<double>().normalized();
        CHECK((kn - al.wave_vector).norm() < 1e-12);
        CHECK((al.direction.U * al.wave_vector + al.q_bar * al.wave_vector).norm() <
              1e-10);
    }
}

}  // TEST_SUITE
