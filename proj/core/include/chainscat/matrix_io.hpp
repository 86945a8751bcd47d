#pragma once

#include <filesystem>
#include <string>

#include "chainscat/smatrix.hpp"

namespace chainscat {

/// Result of reading a matrix file: the matrix and its unitarity residual.
struct MatrixFile {
  ScatteringMatrix matrix;
  double residual;
};

/// JSON text {"d": d, "re": [[...]], "im": [[...]]} with row-major 2d x 2d arrays.
std::string to_json(const ScatteringMatrix& s);

/// Parse the JSON matrix format. Throws StructuralError on malformed input and
/// when the unitarity residual exceeds `tol` (the message reports the residual).
MatrixFile parse_matrix_json(const std::string& text, double tol = tolerance::kUnitarity);

MatrixFile read_matrix_file(const std::filesystem::path& path, double tol = tolerance::kUnitarity);
void write_matrix_file(const std::filesystem::path& path, const ScatteringMatrix& s);

/// Shortest decimal string that parses back to exactly `x`.
std::string format_double(double x);

}  // namespace chainscat
