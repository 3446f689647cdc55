#pragma once

#include "qgn/lattice.hpp"
#include "qgn/types.hpp"

#include <optional>
#include <utility>
#include <variant>
#include <vector>

namespace qgn {

enum class BasisKind { spin, fermion };

/// Which single-qubit eigenbasis bit 0 / bit 1 refer to. In the z frame bit 0
/// is |up> (sigma^z = +1); in the x frame bit 0 is |+x> (sigma^x = +1).
enum class PauliFrame { z, x };

/// Occupation-bitstring basis. Bit i of a state is site i.
class Basis {
 public:
  Basis() = default;

  BasisKind kind() const { return kind_; }
  PauliFrame frame() const { return frame_; }
  int n_sites() const { return n_sites_; }
  std::optional<int> sector() const { return sector_; }
  Index size() const { return size_; }
  bool is_full() const { return !sector_; }

  Bits state(Index i) const { return is_full() ? static_cast<Bits>(i) : states_[i]; }
  /// Position of a bitstring, or -1 when it lies outside the basis.
  Index index(Bits b) const;
  bool contains(Bits b) const { return index(b) >= 0; }

  bool operator==(const Basis& o) const {
    return kind_ == o.kind_ && frame_ == o.frame_ && n_sites_ == o.n_sites_ && sector_ == o.sector_;
  }

 private:
  friend Basis build_basis(BasisKind, int, std::optional<int>, PauliFrame);
  BasisKind kind_ = BasisKind::spin;
  PauliFrame frame_ = PauliFrame::z;
  int n_sites_ = 0;
  std::optional<int> sector_;
  Index size_ = 0;
  std::vector<Bits> states_;
};

/// Throws InvalidLattice for n_sites outside 1..28, InvalidSector for a
/// sector on a spin basis or outside 0..n_sites.
Basis build_basis(BasisKind kind, int n_sites, std::optional<int> sector = {},
                  PauliFrame frame = PauliFrame::z);

/// All bitstrings of n bits with k set, ascending.
std::vector<Bits> fixed_weight_states(int n, int k);

struct SparseOperator {
  SparseMatrix matrix;
  bool hermitian = false;

  Index rows() const { return matrix.rows(); }
  Index cols() const { return matrix.cols(); }
  Vector operator*(const Vector& v) const { return matrix * v; }
};

// ---------------------------------------------------------------------------
// Bitstring-level operators

enum class SiteOpKind { identity, create, annihilate, number, pauli_x, pauli_y, pauli_z };

struct SiteOp {
  SiteOpKind kind = SiteOpKind::identity;
  int site = 0;
};

/// Statistics and frame used when applying site operators to bitstrings.
struct Statistics {
  BasisKind kind = BasisKind::spin;
  PauliFrame frame = PauliFrame::z;

  static Statistics of(const Basis& b) { return {b.kind(), b.frame()}; }
};

/// Apply one site operator to a bitstring. Amplitude 0 means annihilated.
/// Fermionic ladder operators carry the sign (-1)^(number of occupied sites
/// below the target site).
std::pair<cplx, Bits> apply_site_op(Statistics stats, SiteOp op, Bits b);

/// coeff * f[0] f[1] ... f[n-1] (the last factor acts first).
struct OpTerm {
  cplx coeff{1.0, 0.0};
  std::vector<SiteOp> factors;
};

/// Sum of products of site operators, applied directly to bitstrings.
class BitOperator {
 public:
  BitOperator() = default;
  explicit BitOperator(Statistics stats) : stats_(stats) {}
  BitOperator(Statistics stats, std::vector<OpTerm> terms) : stats_(stats), terms_(std::move(terms)) {}

  static BitOperator site(Statistics stats, SiteOp op, cplx coeff = 1.0);
  static BitOperator identity(Statistics stats, cplx coeff = 1.0);

  Statistics statistics() const { return stats_; }
  const std::vector<OpTerm>& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }

  /// Appends (amplitude, image) pairs for every surviving term.
  void apply(Bits b, std::vector<std::pair<cplx, Bits>>& out) const;

  BitOperator adjoint() const;
  BitOperator& operator+=(const BitOperator& o);
  BitOperator& operator*=(cplx c);
  friend BitOperator operator+(BitOperator a, const BitOperator& b) { return a += b; }
  friend BitOperator operator*(cplx c, BitOperator a) { return a *= c; }
  /// Operator product a*b (b acts first).
  friend BitOperator operator*(const BitOperator& a, const BitOperator& b);

 private:
  Statistics stats_;
  std::vector<OpTerm> terms_;
};

/// Matrix <c|op|d> for c in codomain, d in domain. Assembled row by row from
/// the adjoint action, so components leaving the domain are dropped.
SparseOperator to_sparse(const BitOperator& op, const Basis& domain, const Basis& codomain);
SparseOperator to_sparse(const BitOperator& op, const Basis& basis);

enum class Ladder { create, annihilate };
enum class Axis { x, y, z };

/// Fermion ladder operator. On a sector basis the codomain is the adjacent
/// sector (N+1 for create, N-1 for annihilate); on a full basis it is square.
SparseOperator fermion_op(const Basis& basis, int site, Ladder mode);
/// Basis the fermion operator maps into.
Basis fermion_op_codomain(const Basis& basis, Ladder mode);
/// Throws KindMismatch for fermion bases.
SparseOperator pauli_op(const Basis& basis, int site, Axis axis);
SparseOperator number_op(const Basis& basis, int site);

// ---------------------------------------------------------------------------
// Models

/// -sum (c^dag_i c_j + h.c.) + V sum n_i n_j over nearest-neighbour bonds.
struct FermiModel {
  double V = 0.0;
};
/// -sum sigma^z_i sigma^z_j - h sum sigma^x_i.
struct IsingModel {
  double h = 0.0;
};
using Model = std::variant<FermiModel, IsingModel>;

/// Per-patch Hamiltonian terms for an nn-pair patch graph; their sum is the
/// full Hamiltonian. Ising fields are split as h/deg(i) over the deg(i)
/// patches containing site i.
std::vector<BitOperator> local_hamiltonian_terms(const Model& model, const PatchGraph& graph,
                                                 Statistics stats);

std::vector<std::pair<int, SparseOperator>> build_local_hamiltonians(const Model& model,
                                                                      const PatchGraph& graph,
                                                                      const Basis& basis);
SparseOperator build_full_hamiltonian(const Model& model, const PatchGraph& graph,
                                      const Basis& basis);

/// Single-particle hopping matrix h with h_ij = -1 on every bond.
Matrix hopping_matrix(const LatticeSpec& lattice);

// ---------------------------------------------------------------------------
// Exact evolution

struct KrylovOptions {
  int krylov_dim = 30;
  double tolerance = 1e-12;
  Index dense_threshold = 512;
  int max_substeps = 100000;
};

/// e^{-iHt} propagator. Dense eigendecomposition (cached) below the dense
/// threshold, Lanczos with full reorthogonalization and adaptive substeps
/// otherwise.
class ExactPropagator {
 public:
  explicit ExactPropagator(SparseOperator H, KrylovOptions opts = {});

  Vector evolve(const Vector& psi, double t) const;
  bool dense() const { return dense_; }
  Index dimension() const { return H_.rows(); }

 private:
  Vector krylov_evolve(const Vector& psi, double t) const;

  SparseOperator H_;
  KrylovOptions opts_;
  bool dense_ = false;
  RealVector evals_;
  Matrix evecs_;
};

/// One-shot e^{-iHt}|psi>. Throws ContractViolation for non-Hermitian H and
/// ToleranceError when the Krylov iteration cannot meet the tolerance.
Vector exact_evolve(const Vector& psi, const SparseOperator& H, double t, KrylovOptions opts = {});

/// Maximum |H_ij - conj(H_ji)|, sampled on a deterministic subset of entries
/// when the operator is very large.
double hermiticity_residual(const SparseOperator& H);

/// Correlation matrix C(t), C_ij = <c^dag_i c_j>, for the quadratic
/// Hamiltonian sum h_ij c^dag_i c_j.
Matrix free_fermion_evolve(const Matrix& h, const Matrix& C0, double t);
/// C_ij for a single occupation bitstring.
Matrix occupation_correlation_matrix(int n_sites, Bits occupation);

/// <n_i> for every site of a state on the given basis.
RealVector site_occupations(const Basis& basis, const Vector& psi);
/// <psi|op|psi> on a single basis.
cplx expectation(const SparseOperator& op, const Vector& psi);

}  // namespace qgn
