#pragma once

#include <cstdint>
#include <string>

#include "pwforge/grid.hpp"

namespace pwforge {

// "PWFG" field container. Layout (all integers little-endian):
//   bytes 0..3   magic "PWFG"
//   u32          version (currently 1)
//   u32          kind: 0 scalar, 1 vector, 2 matrix
//   u32          d
//   u32 x d      points per axis
//   f64 payload  row-major nodes (last axis fastest), component index fastest
// Payload length must equal prod(sizes) * components * 8 bytes; writes are
// atomic (temp file + rename) and round-trips are bitwise exact.

enum class FieldKind : std::uint32_t { scalar = 0, vector = 1, matrix = 2 };

inline constexpr std::uint32_t kFieldFormatVersion = 1;

void write_field(const std::string& path, const ScalarField& f);
void write_field(const std::string& path, const VectorField& f);
void write_field(const std::string& path, const MatrixField& f);

FieldKind peek_field_kind(const std::string& path);
ScalarField read_scalar_field(const std::string& path);
VectorField read_vector_field(const std::string& path);
MatrixField read_matrix_field(const std::string& path);

}  // namespace pwforge
