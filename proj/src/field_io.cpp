#include "pwforge/field_io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <vector>

namespace pwforge {

namespace {

static_assert(std::endian::native == std::endian::little,
              "field files are little-endian; byte swapping is not implemented");

constexpr char kMagic[4] = {'P', 'W', 'F', 'G'};

struct Header {
    std::uint32_t version = kFieldFormatVersion;
    std::uint32_t kind = 0;
    std::uint32_t d = 0;
    std::vector<std::uint32_t> sizes;
};

void write_raw(const std::string& path, const Header& h,
               const std::vector<const ScalarField*>& comps) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw io_error("cannot open for writing: " + tmp);
        out.write(kMagic, 4);
        auto put32 = [&](std::uint32_t v) {
            out.write(reinterpret_cast<const char*>(&v), 4);
        };
        put32(h.version);
        put32(h.kind);
        put32(h.d);
        for (auto s : h.sizes) put32(s);
        const std::int64_t n = comps[0]->grid.total();
        std::vector<double> row(comps.size());
        for (std::int64_t p = 0; p < n; ++p) {
            for (size_t c = 0; c < comps.size(); ++c) row[c] = (*comps[c])[p];
            out.write(reinterpret_cast<const char*>(row.data()),
                      static_cast<std::streamsize>(row.size() * sizeof(double)));
        }
        if (!out) throw io_error("write failed: " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw io_error("rename failed: " + path);
}

Header read_header(std::ifstream& in, const std::string& path) {
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw io_error("bad magic in field file: " + path);
    auto get32 = [&]() {
        std::uint32_t v = 0;
        in.read(reinterpret_cast<char*>(&v), 4);
        return v;
    };
    Header h;
    h.version = get32();
    if (h.version != kFieldFormatVersion)
        throw io_error("unsupported field file version in " + path);
    h.kind = get32();
    h.d = get32();
    if (!in || h.kind > 2 || h.d < 1 || h.d > 8)
        throw io_error("corrupt field header in " + path);
    for (std::uint32_t i = 0; i < h.d; ++i) h.sizes.push_back(get32());
    if (!in) throw io_error("corrupt field header in " + path);
    return h;
}

std::vector<ScalarField> read_raw(const std::string& path, FieldKind expect,
                                  TorusGrid& grid_out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open field file: " + path);
    const Header h = read_header(in, path);
    if (h.kind != static_cast<std::uint32_t>(expect))
        throw io_error("field kind mismatch in " + path);
    std::vector<int> n(h.sizes.begin(), h.sizes.end());
    TorusGrid grid(n);
    const int ncomp = (expect == FieldKind::scalar)  ? 1
                      : (expect == FieldKind::vector) ? static_cast<int>(h.d)
                                                      : static_cast<int>(h.d * h.d);
    // Payload length check against the file size.
    const auto data_start = in.tellg();
    in.seekg(0, std::ios::end);
    const auto fsize = in.tellg();
    in.seekg(data_start);
    const std::int64_t expected =
        grid.total() * static_cast<std::int64_t>(ncomp) * 8;
    if (fsize - data_start != expected)
        throw io_error("payload length mismatch in " + path);

    std::vector<ScalarField> comps(ncomp, ScalarField(grid));
    std::vector<double> row(ncomp);
    for (std::int64_t p = 0; p < grid.total(); ++p) {
        in.read(reinterpret_cast<char*>(row.data()),
                static_cast<std::streamsize>(row.size() * sizeof(double)));
        for (int c = 0; c < ncomp; ++c) comps[c][p] = row[c];
    }
    if (!in) throw io_error("truncated field file: " + path);
    grid_out = grid;
    return comps;
}

Header make_header(FieldKind kind, const TorusGrid& g) {
    Header h;
    h.kind = static_cast<std::uint32_t>(kind);
    h.d = static_cast<std::uint32_t>(g.dim());
    for (int ni : g.n) h.sizes.push_back(static_cast<std::uint32_t>(ni));
    return h;
}

}  // namespace

void write_field(const std::string& path, const ScalarField& f) {
    write_raw(path, make_header(FieldKind::scalar, f.grid), {&f});
}

void write_field(const std::string& path, const VectorField& f) {
    std::vector<const ScalarField*> comps;
    for (const auto& c : f.comp) comps.push_back(&c);
    write_raw(path, make_header(FieldKind::vector, f.grid), comps);
}

void write_field(const std::string& path, const MatrixField& f) {
    std::vector<const ScalarField*> comps;
    for (const auto& c : f.comp) comps.push_back(&c);
    write_raw(path, make_header(FieldKind::matrix, f.grid), comps);
}

FieldKind peek_field_kind(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open field file: " + path);
    const Header h = read_header(in, path);
    return static_cast<FieldKind>(h.kind);
}

ScalarField read_scalar_field(const std::string& path) {
    TorusGrid g;
    auto comps = read_raw(path, FieldKind::scalar, g);
    return std::move(comps[0]);
}

VectorField read_vector_field(const std::string& path) {
    TorusGrid g;
    auto comps = read_raw(path, FieldKind::vector, g);
    VectorField out(g, static_cast<int>(comps.size()));
    out.comp = std::move(comps);
    return out;
}

MatrixField read_matrix_field(const std::string& path) {
    TorusGrid g;
    auto comps = read_raw(path, FieldKind::matrix, g);
    MatrixField out(g);
    out.comp = std::move(comps);
    return out;
}

}  // namespace pwforge
