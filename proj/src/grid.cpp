#include "pwforge/grid.hpp"

#include <cmath>

namespace pwforge {

TorusGrid::TorusGrid(std::vector<int> n_) : n(std::move(n_)) {
    if (dim() < 1) throw precondition_error("TorusGrid: empty size list");
    for (int ni : n)
        if (ni < 8 || ni % 2 != 0)
            throw precondition_error("TorusGrid: axis sizes must be even and >= 8");
}

TorusGrid::TorusGrid(int d, int n_per_axis)
    : TorusGrid(std::vector<int>(static_cast<size_t>(d), n_per_axis)) {}

std::int64_t TorusGrid::total() const {
    std::int64_t t = 1;
    for (int ni : n) t *= ni;
    return t;
}

double TorusGrid::dx(int axis) const { return 2.0 * M_PI / n[axis]; }

double TorusGrid::cell_volume() const {
    double v = 1.0;
    for (int i = 0; i < dim(); ++i) v *= dx(i);
    return v;
}

double TorusGrid::volume() const { return std::pow(2.0 * M_PI, dim()); }

double TorusGrid::coord(int axis, int idx) const { return dx(axis) * idx; }

ScalarField& ScalarField::operator+=(const ScalarField& o) {
    for (size_t i = 0; i < a.size(); ++i) a[i] += o.a[i];
    return *this;
}
ScalarField& ScalarField::operator-=(const ScalarField& o) {
    for (size_t i = 0; i < a.size(); ++i) a[i] -= o.a[i];
    return *this;
}
ScalarField& ScalarField::operator*=(double s) {
    for (double& x : a) x *= s;
    return *this;
}

VectorField::VectorField(const TorusGrid& g, int ncomp_) : grid(g) {
    comp.assign(ncomp_, ScalarField(g));
}
VectorField::VectorField(const TorusGrid& g) : VectorField(g, g.dim()) {}

VectorField& VectorField::operator+=(const VectorField& o) {
    for (int c = 0; c < ncomp(); ++c) comp[c] += o.comp[c];
    return *this;
}
VectorField& VectorField::operator*=(double s) {
    for (auto& c : comp) c *= s;
    return *this;
}

MatrixField::MatrixField(const TorusGrid& g) : grid(g), d(g.dim()) {
    comp.assign(static_cast<size_t>(d) * d, ScalarField(g));
}

MatrixField& MatrixField::operator+=(const MatrixField& o) {
    for (size_t c = 0; c < comp.size(); ++c) comp[c] += o.comp[c];
    return *this;
}
MatrixField& MatrixField::operator*=(double s) {
    for (auto& c : comp) c *= s;
    return *this;
}

void unflatten(const TorusGrid& g, std::int64_t idx, int* out) {
    for (int ax = g.dim() - 1; ax >= 0; --ax) {
        out[ax] = static_cast<int>(idx % g.n[ax]);
        idx /= g.n[ax];
    }
}

}  // namespace pwforge
