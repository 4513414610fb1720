#include "pwforge/config.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

namespace pwforge {

namespace {

using nlohmann::json;

json load_document(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open config: " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::parse_error& e) {
        throw config_error("config parse error in " + path + ": " + e.what());
    }
    if (!doc.is_object()) throw config_error("config root must be an object");
    return doc;
}

void check_keys(const json& obj, const std::set<std::string>& allowed,
                const std::string& ctx) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key()))
            throw config_error("unknown key \"" + it.key() + "\" in " + ctx);
}

double num(const json& j, const std::string& ctx) {
    if (!j.is_number()) throw config_error(ctx + " must be a number");
    return j.get<double>();
}

Box parse_box(const json& j, int d, const std::string& ctx) {
    check_keys(j, {"lo", "hi"}, ctx);
    if (!j.contains("lo") || !j.contains("hi"))
        throw config_error(ctx + " needs lo and hi arrays");
    Box b;
    for (const auto& x : j.at("lo")) b.lo.push_back(num(x, ctx + ".lo"));
    for (const auto& x : j.at("hi")) b.hi.push_back(num(x, ctx + ".hi"));
    if (static_cast<int>(b.lo.size()) != d || static_cast<int>(b.hi.size()) != d)
        throw config_error(ctx + " must have d entries per corner");
    for (int ax = 0; ax < d; ++ax)
        if (!(b.lo[ax] < b.hi[ax])) throw config_error(ctx + " has empty extent");
    return b;
}

Mat parse_matrix(const json& j, int d, const std::string& ctx) {
    Mat B = Mat::Zero(d, d);
    if (j.is_array() && !j.empty() && j[0].is_array()) {
        if (static_cast<int>(j.size()) != d)
            throw config_error(ctx + " must have d rows");
        for (int i = 0; i < d; ++i) {
            if (static_cast<int>(j[i].size()) != d)
                throw config_error(ctx + " rows must have d entries");
            for (int c = 0; c < d; ++c) B(i, c) = num(j[i][c], ctx);
        }
        return B;
    }
    if (j.is_array()) {  // flat row-major
        if (static_cast<int>(j.size()) != d * d)
            throw config_error(ctx + " must have d*d entries");
        for (int i = 0; i < d * d; ++i) B(i / d, i % d) = num(j[i], ctx);
        return B;
    }
    throw config_error(ctx + " must be an array");
}

EnergyProfile parse_energy(const json& j, int d, RunMode mode) {
    check_keys(j, {"kind", "value", "base", "amps", "box", "amplitude", "ramp_fraction"},
               "energy");
    EnergyProfile e;
    const std::string kind = j.value("kind", "constant");
    if (kind == "constant") {
        e.kind = EnergyProfile::Kind::constant;
        e.base = j.contains("value") ? num(j.at("value"), "energy.value")
                                     : j.value("base", 1.0);
    } else if (kind == "cosine") {
        e.kind = EnergyProfile::Kind::cosine;
        e.base = num(j.at("base"), "energy.base");
        if (j.contains("amps"))
            for (const auto& a : j.at("amps")) e.amps.push_back(num(a, "energy.amps"));
    } else if (kind == "compact_bump") {
        e.kind = EnergyProfile::Kind::compact_bump;
        e.support = parse_box(j.at("box"), d, "energy.box");
        e.amplitude = j.value("amplitude", 1.0);
        e.ramp_fraction = j.value("ramp_fraction", 0.25);
        if (!(e.ramp_fraction > 0.0) || !(e.ramp_fraction <= 0.5))
            throw config_error("energy.ramp_fraction must lie in (0, 0.5]");
    } else {
        throw config_error("energy.kind must be constant, cosine or compact_bump");
    }
    if (mode == RunMode::compact && e.kind != EnergyProfile::Kind::compact_bump)
        throw config_error("compact mode requires a compact_bump energy profile");
    return e;
}

HullParams parse_hull(const json& j) {
    check_keys(j, {"depth", "dirs", "samples", "interior_margin"}, "hull");
    HullParams hp;
    hp.depth = j.value("depth", hp.depth);
    hp.n_dirs = j.value("dirs", hp.n_dirs);
    hp.n_samples = j.value("samples", hp.n_samples);
    hp.interior_margin = j.value("interior_margin", hp.interior_margin);
    if (hp.depth < 0 || hp.n_dirs < 1 || hp.n_samples < 1)
        throw config_error("hull parameters must be positive");
    return hp;
}

std::vector<int> parse_grid(const json& j, int d) {
    check_keys(j, {"n"}, "grid");
    std::vector<int> n;
    const auto& jn = j.at("n");
    if (jn.is_number()) {
        n.assign(d, jn.get<int>());
    } else {
        for (const auto& x : jn) n.push_back(x.get<int>());
    }
    if (static_cast<int>(n.size()) != d)
        throw config_error("grid.n must have d entries (or be a single integer)");
    return n;
}

std::vector<SweepStep> parse_schedule(const json& j, const std::vector<int>& n) {
    int nmin = n[0];
    for (int ni : n) nmin = std::min(nmin, ni);
    std::vector<SweepStep> out;
    if (j.is_array()) {
        for (const auto& s : j) {
            check_keys(s, {"k_cells", "lambda", "delta"}, "schedule[]");
            SweepStep st;
            st.k_cells = s.at("k_cells").get<int>();
            st.lambda = s.at("lambda").get<int>();
            st.delta = num(s.at("delta"), "schedule.delta");
            out.push_back(st);
        }
        return out;
    }
    check_keys(j, {"sweeps", "k0", "lambda0", "delta0"}, "schedule");
    const int sweeps = j.value("sweeps", 3);
    const int k0 = j.value("k0", 0);
    const int lambda0 = j.value("lambda0", 8);
    const double delta0 = j.value("delta0", 1.0 / 16);
    for (int s = 0; s < sweeps; ++s) {
        SweepStep st;
        st.lambda = std::min(lambda0 << s, nmin / 8);
        // Keep at least eight oscillations per cell (cutoff ramps take about
        // one period per side) and cells dividing the grid.
        int k = k0 + s;
        while (k > 0 && (st.lambda >> k) < 8) --k;
        while (k > 0 && nmin % (1 << k) != 0) --k;
        st.k_cells = k;
        st.delta = std::max(delta0 * std::pow(0.5, s), 1.0 / 256);
        out.push_back(st);
    }
    return out;
}

SegmentConfig parse_segment(const json& j) {
    check_keys(j, {"sphere_resolution", "lattice_dirs", "bisect_iters"}, "segment");
    SegmentConfig sc;
    sc.sphere_resolution = j.value("sphere_resolution", sc.sphere_resolution);
    sc.lattice_dirs = j.value("lattice_dirs", sc.lattice_dirs);
    sc.bisect_iters = j.value("bisect_iters", sc.bisect_iters);
    return sc;
}

const std::set<std::string> kRunKeys = {
    "mode",   "d",          "grid",     "energy",        "source",
    "base_flow", "schedule", "gamma",    "deficit_floor", "margin_floor",
    "seed",   "hull",       "segment",  "tolerances",    "weak_tests",
    "hull_check_nodes",     "output_dir", "wave"};

RunConfig parse_run(const json& doc) {
    check_keys(doc, kRunKeys, "config");
    RunConfig cfg;
    cfg.d = doc.value("d", 2);
    const std::string mode = doc.value("mode", "periodic");
    if (mode == "periodic")
        cfg.mode = RunMode::periodic;
    else if (mode == "compact")
        cfg.mode = RunMode::compact;
    else
        throw config_error("mode must be periodic or compact");
    if (!doc.contains("grid")) throw config_error("config needs a grid section");
    cfg.n = parse_grid(doc.at("grid"), cfg.d);
    cfg.energy = doc.contains("energy")
                     ? parse_energy(doc.at("energy"), cfg.d, cfg.mode)
                     : EnergyProfile{};
    cfg.B = doc.contains("source") ? parse_matrix(doc.at("source"), cfg.d, "source")
                                   : Mat::Zero(cfg.d, cfg.d);
    if (doc.contains("base_flow")) {
        const auto& bf = doc.at("base_flow");
        check_keys(bf, {"kind", "amplitude", "mode"}, "base_flow");
        const std::string kind = bf.value("kind", "zero");
        if (kind == "zero")
            cfg.base_flow.kind = BaseFlow::Kind::zero;
        else if (kind == "shear")
            cfg.base_flow.kind = BaseFlow::Kind::shear;
        else
            throw config_error("base_flow.kind must be zero or shear");
        cfg.base_flow.amplitude = bf.value("amplitude", 1.0);
        cfg.base_flow.mode = bf.value("mode", 1);
    }
    if (doc.contains("schedule"))
        cfg.schedule = parse_schedule(doc.at("schedule"), cfg.n);
    cfg.gamma = doc.value("gamma", cfg.gamma);
    cfg.deficit_floor = doc.value("deficit_floor", cfg.deficit_floor);
    cfg.margin_floor = doc.value("margin_floor", cfg.margin_floor);
    cfg.seed = doc.value("seed", cfg.seed);
    if (doc.contains("hull")) cfg.hull = parse_hull(doc.at("hull"));
    if (doc.contains("segment")) cfg.segment = parse_segment(doc.at("segment"));
    if (doc.contains("tolerances")) {
        const auto& t = doc.at("tolerances");
        check_keys(t, {"flow_residual", "global_residual", "member"}, "tolerances");
        cfg.tol.flow_residual = t.value("flow_residual", cfg.tol.flow_residual);
        cfg.tol.global_residual = t.value("global_residual", cfg.tol.global_residual);
        cfg.tol.member_tol = t.value("member", cfg.tol.member_tol);
    }
    cfg.weak_tests = doc.value("weak_tests", cfg.weak_tests);
    cfg.hull_check_nodes = doc.value("hull_check_nodes", cfg.hull_check_nodes);
    cfg.output_dir = doc.value("output_dir", cfg.output_dir);
    cfg.validate();
    return cfg;
}

}  // namespace

RunConfig load_run_config(const std::string& path) {
    return parse_run(load_document(path));
}

WaveConfig load_wave_config(const std::string& path) {
    const json doc = load_document(path);
    check_keys(doc, kRunKeys, "config");
    if (!doc.contains("wave")) throw config_error("config needs a wave section");
    const json& w = doc.at("wave");
    check_keys(w, {"r", "lambda", "delta", "region", "center", "seed"}, "wave");

    WaveConfig wc;
    wc.d = doc.value("d", 2);
    if (!doc.contains("grid")) throw config_error("config needs a grid section");
    wc.n = parse_grid(doc.at("grid"), wc.d);
    wc.B = doc.contains("source") ? parse_matrix(doc.at("source"), wc.d, "source")
                                  : Mat::Zero(wc.d, wc.d);
    if (doc.contains("hull")) wc.hull = parse_hull(doc.at("hull"));
    if (doc.contains("segment")) wc.segment = parse_segment(doc.at("segment"));
    wc.output_dir = doc.value("output_dir", wc.output_dir);

    wc.r = w.value("r", 1.0);
    if (!(wc.r > 0.0)) throw config_error("wave.r must be positive");
    wc.lambda = w.value("lambda", 16);
    if (wc.lambda < 1) throw config_error("wave.lambda must be >= 1");
    wc.delta = w.value("delta", 1.0 / 16);
    if (w.contains("region")) {
        wc.region = parse_box(w.at("region"), wc.d, "wave.region");
    } else {
        wc.region.lo.assign(wc.d, 0.0);
        wc.region.hi.assign(wc.d, M_PI);
    }
    wc.seed = w.value("seed", 1);
    if (w.contains("center")) {
        const json& c = w.at("center");
        check_keys(c, {"v", "U"}, "wave.center");
        Vec v = Vec::Zero(wc.d);
        Mat U = Mat::Zero(wc.d, wc.d);
        if (c.contains("v")) {
            if (static_cast<int>(c.at("v").size()) != wc.d)
                throw config_error("wave.center.v must have d entries");
            for (int i = 0; i < wc.d; ++i) v(i) = num(c.at("v")[i], "wave.center.v");
        }
        if (c.contains("U")) U = parse_matrix(c.at("U"), wc.d, "wave.center.U");
        wc.center = StatePoint(std::move(v), std::move(U));
        wc.center.validate(1e-9);
    } else {
        wc.center = StatePoint::zero(wc.d);
    }
    return wc;
}

}  // namespace pwforge
