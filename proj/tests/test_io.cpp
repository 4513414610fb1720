#include <doctest.h>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <random>

#include "pwforge/config.hpp"
#include "pwforge/field_io.hpp"

using namespace pwforge;

namespace {

struct TempDir {
    std::string path;
    TempDir() {
        char buf[] = "/tmp/pwforge_test_XXXXXX";
        path = mkdtemp(buf);
    }
    std::string file(const std::string& name) const { return path + "/" + name; }
};

void write_json(const std::string& path, const std::string& body) {
    std::ofstream out(path);
    out << body;
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("field round-trips are bitwise exact") {
    TempDir tmp;
    const TorusGrid g(2, 16);
    std::mt19937_64 rng(3);
    std::normal_distribution<double> gauss(0.0, 1.0);

    ScalarField s(g);
    for (auto& x : s.a) x = gauss(rng) * std::pow(10.0, int(gauss(rng) * 30));
    write_field(tmp.file("s.pwfg"), s);
    const ScalarField s2 = read_scalar_field(tmp.file("s.pwfg"));
    REQUIRE(s2.grid == g);
    CHECK(std::memcmp(s.a.data(), s2.a.data(), s.a.size() * 8) == 0);

    VectorField v(g, 2);
    for (auto& c : v.comp)
        for (auto& x : c.a) x = gauss(rng);
    write_field(tmp.file("v.pwfg"), v);
    const VectorField v2 = read_vector_field(tmp.file("v.pwfg"));
    for (int c = 0; c < 2; ++c)
        CHECK(std::memcmp(v.comp[c].a.data(), v2.comp[c].a.data(),
                          v.comp[c].a.size() * 8) == 0);

    MatrixField M(g);
    for (auto& c : M.comp)
        for (auto& x : c.a) x = gauss(rng);
    write_field(tmp.file("M.pwfg"), M);
    const MatrixField M2 = read_matrix_field(tmp.file("M.pwfg"));
    for (int c = 0; c < 4; ++c)
        CHECK(std::memcmp(M.comp[c].a.data(), M2.comp[c].a.data(),
                          M.comp[c].a.size() * 8) == 0);

    CHECK(peek_field_kind(tmp.file("M.pwfg")) == FieldKind::matrix);
}

TEST_CASE("corrupted headers and payloads are rejected") {
    TempDir tmp;
    const TorusGrid g(2, 16);
    ScalarField s(g);
    write_field(tmp.file("f.pwfg"), s);

    // Flip a magic byte.
    {
        std::fstream f(tmp.file("f.pwfg"),
                       std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(0);
        f.put('X');
    }
    CHECK_THROWS_AS(read_scalar_field(tmp.file("f.pwfg")), io_error);

    // Kind mismatch.
    write_field(tmp.file("g.pwfg"), s);
    CHECK_THROWS_AS(read_vector_field(tmp.file("g.pwfg")), io_error);

    // Truncated payload.
    write_field(tmp.file("h.pwfg"), s);
    REQUIRE(truncate(tmp.file("h.pwfg").c_str(), 64) == 0);
    CHECK_THROWS_AS(read_scalar_field(tmp.file("h.pwfg")), io_error);

    CHECK_THROWS_AS(read_scalar_field(tmp.file("missing.pwfg")), io_error);
}

TEST_CASE("run config: defaults, validation, unknown keys") {
    TempDir tmp;
    write_json(tmp.file("ok.json"), R"({
        "mode": "periodic", "d": 2, "grid": {"n": [64, 64]},
        "energy": {"kind": "constant", "value": 1.0},
        "schedule": [{"k_cells": 1, "lambda": 8, "delta": 0.0625}],
        "seed": 3
    })");
    const RunConfig cfg = load_run_config(tmp.file("ok.json"));
    CHECK(cfg.d == 2);
    CHECK(cfg.seed == 3);
    REQUIRE(cfg.schedule.size() == 1);
    CHECK(cfg.schedule[0].lambda == 8);

    write_json(tmp.file("unknown.json"), R"({
        "mode": "periodic", "d": 2, "grid": {"n": [64, 64]}, "bogus": 1
    })");
    CHECK_THROWS_AS(load_run_config(tmp.file("unknown.json")), config_error);

    write_json(tmp.file("neg.json"), R"({
        "mode": "periodic", "d": 2, "grid": {"n": [64, 64]},
        "energy": {"kind": "constant", "value": -1.0}
    })");
    CHECK_THROWS_AS(load_run_config(tmp.file("neg.json")), config_error);

    write_json(tmp.file("coarse.json"), R"({
        "mode": "periodic", "d": 2, "grid": {"n": [32, 32]},
        "schedule": [{"k_cells": 1, "lambda": 16, "delta": 0.0625}]
    })");
    CHECK_THROWS_AS(load_run_config(tmp.file("coarse.json")), config_error);
}

TEST_CASE("schedule generator respects the resolution cap") {
    TempDir tmp;
    write_json(tmp.file("gen.json"), R"({
        "mode": "periodic", "d": 2, "grid": {"n": [128, 128]},
        "schedule": {"sweeps": 3, "k0": 1, "lambda0": 8, "delta0": 0.0625}
    })");
    const RunConfig cfg = load_run_config(tmp.file("gen.json"));
    REQUIRE(cfg.schedule.size() == 3);
    for (const auto& s : cfg.schedule) {
        CHECK(s.lambda * 8 <= 128);
        CHECK((s.lambda >> s.k_cells) >= 8);
    }
}

TEST_CASE("wave config loads with overrides and strict keys") {
    TempDir tmp;
    write_json(tmp.file("wave.json"), R"({
        "d": 2, "grid": {"n": [128, 128]},
        "wave": {"r": 1.0, "lambda": 8, "delta": 0.0625,
                 "region": {"lo": [0.0, 0.0], "hi": [3.141592653589793, 3.141592653589793]}}
    })");
    const WaveConfig wc = load_wave_config(tmp.file("wave.json"));
    CHECK(wc.lambda == 8);
    CHECK(wc.center.norm() == 0.0);

    write_json(tmp.file("wave_bad.json"), R"({
        "d": 2, "grid": {"n": [128, 128]},
        "wave": {"r": 1.0, "lambda": 8, "surprise": true}
    })");
    CHECK_THROWS_AS(load_wave_config(tmp.file("wave_bad.json")), config_error);
}

}  // TEST_SUITE
