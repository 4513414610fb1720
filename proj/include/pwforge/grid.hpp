#pragma once

#include <cstdint>
#include <vector>

#include "pwforge/errors.hpp"

namespace pwforge {

/// Uniform sampling grid on the periodic box [0, 2pi)^d. Node storage is
/// row-major with the last axis fastest.
struct TorusGrid {
    std::vector<int> n;

    TorusGrid() = default;
    explicit TorusGrid(std::vector<int> n_);
    TorusGrid(int d, int n_per_axis);

    int dim() const { return static_cast<int>(n.size()); }
    std::int64_t total() const;
    double dx(int axis) const;
    double cell_volume() const;
    double volume() const;
    /// Coordinate of node index along an axis (index 0 -> 0).
    double coord(int axis, int idx) const;

    bool operator==(const TorusGrid& o) const { return n == o.n; }
    bool operator!=(const TorusGrid& o) const { return n != o.n; }
};

struct ScalarField {
    TorusGrid grid;
    std::vector<double> a;

    ScalarField() = default;
    explicit ScalarField(const TorusGrid& g) : grid(g), a(g.total(), 0.0) {}

    double& operator[](std::int64_t i) { return a[i]; }
    double operator[](std::int64_t i) const { return a[i]; }

    ScalarField& operator+=(const ScalarField& o);
    ScalarField& operator-=(const ScalarField& o);
    ScalarField& operator*=(double s);
};

struct VectorField {
    TorusGrid grid;
    std::vector<ScalarField> comp;

    VectorField() = default;
    VectorField(const TorusGrid& g, int ncomp);
    explicit VectorField(const TorusGrid& g);  // ncomp = d

    int ncomp() const { return static_cast<int>(comp.size()); }
    VectorField& operator+=(const VectorField& o);
    VectorField& operator*=(double s);
};

/// d x d matrix samples, components stored row-major: (i, j) -> comp[i*d + j].
struct MatrixField {
    TorusGrid grid;
    int d = 0;
    std::vector<ScalarField> comp;

    MatrixField() = default;
    explicit MatrixField(const TorusGrid& g);

    ScalarField& at(int i, int j) { return comp[i * d + j]; }
    const ScalarField& at(int i, int j) const { return comp[i * d + j]; }
    MatrixField& operator+=(const MatrixField& o);
    MatrixField& operator*=(double s);
};

/// Row-major multi-index decoding (last axis fastest).
void unflatten(const TorusGrid& g, std::int64_t idx, int* out);

}  // namespace pwforge
