#include "chainscat/matrix_io.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "chainscat/error.hpp"

namespace chainscat {

using nlohmann::json;

std::string format_double(double x) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  if (ec != std::errc{}) throw Error("format_double: conversion failed");
  return std::string(buf.data(), ptr);
}

std::string to_json(const ScatteringMatrix& s) {
  const CMatrix& m = s.matrix();
  // Written by hand so numbers use the shortest round-trip form.
  std::ostringstream out;
  out << "{\"d\": " << s.channels() << ", ";
  for (int part = 0; part < 2; ++part) {
    out << (part == 0 ? "\"re\": [" : ", \"im\": [");
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      out << (i ? ", [" : "[");
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        if (j) out << ", ";
        out << format_double(part == 0 ? m(i, j).real() : m(i, j).imag());
      }
      out << "]";
    }
    out << "]";
  }
  out << "}\n";
  return out.str();
}

MatrixFile parse_matrix_json(const std::string& text, double tol) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw StructuralError(std::string("matrix file: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("d") || !doc.contains("re") || !doc.contains("im")) {
    throw StructuralError("matrix file: expected object with keys d, re, im");
  }
  if (!doc["d"].is_number_integer() || doc["d"].get<long>() < 1) {
    throw StructuralError("matrix file: d must be a positive integer");
  }
  const auto d = doc["d"].get<long>();
  const auto n = 2 * d;
  CMatrix m(n, n);
  for (const char* key : {"re", "im"}) {
    const json& rows = doc[key];
    if (!rows.is_array() || static_cast<long>(rows.size()) != n) {
      throw StructuralError(std::string("matrix file: ") + key + " must have 2d = " + std::to_string(n) + " rows");
    }
    for (long i = 0; i < n; ++i) {
      if (!rows[i].is_array() || static_cast<long>(rows[i].size()) != n) {
        throw StructuralError(std::string("matrix file: ") + key + "[" + std::to_string(i) + "] must have " +
                              std::to_string(n) + " entries");
      }
      for (long j = 0; j < n; ++j) {
        if (!rows[i][j].is_number()) throw StructuralError("matrix file: non-numeric entry");
        const double v = rows[i][j].get<double>();
        if (key[0] == 'r') m(i, j) = Complex(v, 0.0);
        else m(i, j) += Complex(0.0, v);
      }
    }
  }
  ScatteringMatrix s(std::move(m));
  const double residual = unitarity_residual(s);
  if (!(residual <= tol)) {
    throw StructuralError("matrix file: not unitary, residual " + format_double(residual) + " exceeds " +
                          format_double(tol));
  }
  return {std::move(s), residual};
}

MatrixFile read_matrix_file(const std::filesystem::path& path, double tol) {
  std::ifstream in(path);
  if (!in) throw StructuralError("cannot open matrix file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_matrix_json(buf.str(), tol);
}

void write_matrix_file(const std::filesystem::path& path, const ScatteringMatrix& s) {
  std::ofstream out(path);
  if (!out) throw StructuralError("cannot write matrix file " + path.string());
  out << to_json(s);
}

}  // namespace chainscat
