#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace qgn {

using cplx = std::complex<double>;
using Vector = Eigen::VectorXcd;
using Matrix = Eigen::MatrixXcd;
using RealVector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;

/// Occupation bitstring: bit i holds the local state of site i.
using Bits = std::uint64_t;
using Index = Eigen::Index;

inline constexpr cplx I_unit{0.0, 1.0};

// Error hierarchy. Every failure the library reports derives from qgn::Error.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidLattice : Error { using Error::Error; };
struct UnsupportedPath : Error { using Error::Error; };
struct InvalidSector : Error { using Error::Error; };
struct KindMismatch : Error { using Error::Error; };
struct ContractViolation : Error { using Error::Error; };
struct ToleranceError : Error { using Error::Error; };
struct InvalidImage : Error { using Error::Error; };
struct RankError : Error { using Error::Error; };
struct ConstructionError : Error { using Error::Error; };
struct MissingOperator : Error { using Error::Error; };
struct NoPath : Error { using Error::Error; };
struct NonUnitary : Error { using Error::Error; };
struct IntegratorError : Error { using Error::Error; };
struct FormatError : Error { using Error::Error; };

/// Config problem, optionally tied to a line of the source file (1-based; 0 = unknown).
struct ConfigError : Error {
  ConfigError(const std::string& what, int line = 0)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line(line) {}
  int line;
};

}  // namespace qgn
