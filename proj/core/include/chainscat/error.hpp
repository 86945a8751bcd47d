#pragma once

#include <stdexcept>
#include <string>

namespace chainscat {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shape or channel-count mismatch, malformed input.
class StructuralError : public Error {
 public:
  using Error::Error;
};

/// A block that must be inverted is (numerically) singular.
class SingularBlockError : public Error {
 public:
  SingularBlockError(std::string block, double rcond)
      : Error("singular " + block + " block (reciprocal condition " + std::to_string(rcond) + ")"),
        block_(std::move(block)),
        rcond_(rcond) {}

  const std::string& block() const noexcept { return block_; }
  double rcond() const noexcept { return rcond_; }

 private:
  std::string block_;
  double rcond_;
};

/// 1 - r_n^R r^L is singular: two perfect reflectors face each other.
class ResonantCavityError : public Error {
 public:
  using Error::Error;
};

/// Single-channel generator with D = 0 within tolerance.
class MarginalCaseError : public Error {
 public:
  using Error::Error;
};

/// Quantity undefined at a perfect reflector (A = 1).
class DegenerateTransferError : public Error {
 public:
  using Error::Error;
};

/// Eigenvector matrix too ill-conditioned to trust eigenvector data.
class DefectiveSpectrumError : public Error {
 public:
  using Error::Error;
};

/// Invalid experiment or model configuration. `path` names the offending field.
class ConfigError : public Error {
 public:
  ConfigError(std::string path, const std::string& what)
      : Error(path + ": " + what), path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace chainscat
