#pragma once

#include "mwlab/field.hpp"
#include "mwlab/operators.hpp"
#include "mwlab/reducing.hpp"

#include <iosfwd>
#include <string>

namespace mwlab {

// Text artifacts. Every file starts with "<schema> <version>", then one
// header line of key/value pairs, then one line per cell (fields, vectors),
// per matrix row (operators, reducing matrices). Numbers carry 17
// significant digits so a write/read cycle is lossless.
//
//   mwlab-field 1
//   d 1 L 3 n 2 kind weight shift 0 0
//   a11 a12 a21 a22            <- cell 0, row-major
//
//   mwlab-vector 1
//   d 1 L 3 n 2 shift 0 0
//   v1 v2                      <- cell 0
//
//   mwlab-operator 1
//   d 1 L 3 n 2 kind ialpha shift 0 0 quad_error 0
//   <N*n entries>              <- one row per line
//
//   mwlab-reducing 1
//   n 2 mode mvee distortion 1.01 r 4 samples 64 iterations 120 tolerance 1e-07 max_iterations 100000 directions 0
//   <n entries>                <- one row per line

enum class ArtifactKind { field, vector, op, reducing };

inline constexpr int kArtifactVersion = 1;

void write_field(std::ostream& os, const MatrixField& f);
MatrixField read_field(std::istream& is);
void write_vector(std::ostream& os, const VectorField& v);
VectorField read_vector(std::istream& is);
void write_operator(std::ostream& os, const OperatorMatrix& t);
OperatorMatrix read_operator(std::istream& is);
void write_reducing(std::ostream& os, const ReducingMatrix& m);
ReducingMatrix read_reducing(std::istream& is);

/// Kind named by the first line of `path`.
ArtifactKind detect_artifact(const std::string& path);

MatrixField load_field(const std::string& path);
VectorField load_vector(const std::string& path);
OperatorMatrix load_operator(const std::string& path);
ReducingMatrix load_reducing(const std::string& path);

void save_field(const std::string& path, const MatrixField& f);
void save_vector(const std::string& path, const VectorField& v);
void save_operator(const std::string& path, const OperatorMatrix& t);
void save_reducing(const std::string& path, const ReducingMatrix& m);

/// Re-serializes any artifact in canonical form.
void dump_artifact(const std::string& path, std::ostream& os);

}  // namespace mwlab
