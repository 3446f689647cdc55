#pragma once

#include "qgn/network.hpp"
#include "qgn/types.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace qgn {

/// Site tensor A[s] of shape chi_left x chi_right for each physical index s.
using MpsTensor = std::vector<Matrix>;

struct Mps {
  std::vector<MpsTensor> sites;

  int size() const { return static_cast<int>(sites.size()); }
  Index phys(int i) const { return static_cast<Index>(sites.at(i).size()); }
  Index chi_left(int i) const { return sites.at(i).at(0).rows(); }
  Index chi_right(int i) const { return sites.at(i).at(0).cols(); }
  /// Throws ContractViolation for inconsistent shapes or non-unit boundaries.
  void validate() const;
};

/// Simultaneous canonical form: C_i = Lambda_i R_i = L_i Lambda_{i+1}, with
/// left isometries L, right co-isometries R and unit-norm centers C.
struct CanonicalMps {
  std::vector<MpsTensor> L, R, C;
  /// lambda[i] holds the Schmidt values on the bond left of site i;
  /// lambda[0] = lambda[n] = {1}.
  std::vector<RealVector> lambda;

  int size() const { return static_cast<int>(C.size()); }
};

struct CanonicalResiduals {
  double left = 0.0;     // max |sum_s L^dag L - 1|
  double right = 0.0;    // max |sum_s R R^dag - 1|
  double center = 0.0;   // max |norm(C) - 1|
  double overlap = 0.0;  // max |L_i C_{i+1} - C_i R_{i+1}|
};

/// Two SVD sweeps (left to right, then right to left); zero Schmidt values
/// are dropped. Throws ContractViolation for a zero-norm state and
/// ToleranceError when the identities fail to hold to 1e-10.
CanonicalMps mps_canonicalize(const Mps& raw);
CanonicalResiduals canonical_residuals(const CanonicalMps& m);

/// Single-site patches on a chain. psi_i = C_i flattened with index
/// (alpha*d + s)*chi_right + beta, V_{i,i+1} = L_i (x) conj(R_{i+1}), and
/// operator tables 1 (x) A (x) 1; Pauli operators are stored for d = 2.
Network mps_to_qgn(const CanonicalMps& m);

/// Dense amplitudes; bit i (or digit i in base d) is site i.
Vector mps_to_full_state(const Mps& m);
Vector mps_to_full_state(const CanonicalMps& m);

/// Random complex tensors with bond dimensions min(chi, d^i, d^(n-i)).
Mps random_mps(int n, int d, int chi, std::uint64_t seed);
Mps product_mps(const std::vector<Vector>& site_states);
Mps ghz_mps(int n);

// Binary layout (little-endian): "QGNMPS01" | u32 n | n x (u32 chiL, u32 d,
// u32 chiR, chiL*d*chiR x c128 in (a, s, b) order with b fastest).
void write_mps(std::ostream& os, const Mps& m);
Mps read_mps(std::istream& is);
void save_mps(const std::string& path, const Mps& m);
Mps load_mps(const std::string& path);

}  // namespace qgn
