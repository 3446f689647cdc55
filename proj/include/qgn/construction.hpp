#pragma once

#include "qgn/fock.hpp"
#include "qgn/lattice.hpp"
#include "qgn/network.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <vector>

namespace qgn {

// ---------------------------------------------------------------------------
// Images for operator strings

struct StringFactor {
  int patch;
  SparseOperator op;  // full-space operator
};

struct ImageString {
  std::vector<StringFactor> factors;
  /// Midpoint m0 in 1..M, half-integers allowed. Unset: ceil((M+1)/2).
  std::optional<double> m0;
};

struct ImageRequest {
  std::vector<ImageString> strings;
};

double default_midpoint(int M);

/// Per-patch image lists encoding every requested string exactly. Strings
/// that step between non-adjacent patches are bridged by identity factors
/// along the graph's stored shortest path, which is the path
/// expectation_string uses by default. Throws ContractViolation when two
/// consecutive factors sit on the same patch or m0 is out of range.
std::vector<std::vector<Vector>> images_for_strings(const Vector& Psi, const PatchGraph& graph,
                                                    const ImageRequest& req);

/// The same images for every patch: all products of up to k operators applied
/// to Psi, in lexicographic operator order.
std::vector<Vector> k_point_images(const Vector& Psi, const std::vector<SparseOperator>& ops, int k);
std::vector<std::vector<Vector>> images_for_k_point(const Vector& Psi, const PatchGraph& graph,
                                                    const std::vector<SparseOperator>& ops, int k);

/// Pauli operators "x<s>", "y<s>", "z<s>" for every site of a patch.
std::vector<NamedOperator> named_pauli_ops(const Basis& basis, const PatchGraph::Patch& patch);
/// Pauli operators for every patch of a graph.
std::vector<std::vector<NamedOperator>> pauli_ops_per_patch(const Basis& basis, const PatchGraph& graph);

// ---------------------------------------------------------------------------
// Quench images on bitstrings

struct QuenchImages {
  /// Sorted bitstrings per patch.
  std::vector<std::vector<Bits>> states;
  /// Smallest patch dimension after each closure step.
  std::vector<Index> chi_history;
  /// Reached a fixpoint before meeting the target.
  bool saturated = false;
};

enum class Closure { swap, pauli, pauli_even };

/// Iterate closure within each patch, stop once every patch holds at least
/// min_chi states (or nothing changes), otherwise merge the images of
/// overlapping patches from a snapshot and repeat.
QuenchImages quench_images(const PatchGraph& graph, Bits initial, Index min_chi, Closure closure);

/// Swap-within-patch closure from a definite occupation.
QuenchImages fermion_quench_images(const PatchGraph& graph, Bits initial, Index min_chi);
/// Pauli closure from |+x ... +x> (bitstring 0 in the x frame). With
/// even_sector the closure only flips both sites of a patch, which stays in
/// the parity sector of the initial state.
QuenchImages ising_quench_images(const PatchGraph& graph, Index min_chi, bool even_sector = false);

struct NamedBitOperator {
  std::string name;
  BitOperator op;
};

/// QGN whose truncation maps select basis states: psi_I = (Psi_b) for b in
/// the image, V_IJ = overlap pattern of the two image lists, A_I = <a|A|b>
/// restricted to the image. Throws ConstructionError when an image misses
/// part of Psi.
Network basis_qgn(std::shared_ptr<const PatchGraph> graph, const std::vector<std::vector<Bits>>& states,
                  const std::function<cplx(Bits)>& amplitude,
                  const std::vector<std::vector<NamedBitOperator>>& ops);

/// Operator tables for quenches: "H" plus "n<s>" (Fermi) or "x/y/z<s>"
/// (Ising) on every patch.
std::vector<std::vector<NamedBitOperator>> quench_operator_tables(const Model& model,
                                                                  const PatchGraph& graph,
                                                                  Statistics stats);

struct QuenchSetup {
  Network net;
  QuenchImages images;
};

QuenchSetup fermion_quench_qgn(std::shared_ptr<const PatchGraph> graph, double V, Bits initial,
                               Index min_chi);
QuenchSetup ising_quench_qgn(std::shared_ptr<const PatchGraph> graph, double h, Index min_chi,
                             bool even_sector = false);

/// Alternating occupation on a hypercubic lattice; site 0 is filled.
Bits checkerboard(const LatticeSpec& lattice);

// ---------------------------------------------------------------------------
// Analytic constructors and states

/// Tensor product of single-site states (site 0 = bit 0).
Vector product_state(const std::vector<Vector>& site_states);
/// Product-state QGN with images {Psi} and Pauli operator tables.
Network product_state_qgn(std::shared_ptr<const PatchGraph> graph, const std::vector<Vector>& site_states);

enum class MixedVariant { basic, kronecker };

/// (|0...0> + |1...1>)/sqrt2 on n+1 qubits; qubit n is the auxiliary one.
Vector mixed_state_purification(int n);
/// QGN of the two-component mixed state on single-site patches of the
/// lattice, in the natural gauge: V is the identity and the truncated Paulis
/// are sigma^z (basic) or 1 (x) sigma (kronecker).
Network mixed_state_qgn(const LatticeSpec& lattice, MixedVariant variant,
                        PathStyle style = PathStyle::snake);

Vector cat_state(int n);
/// Cat-state QGN whose images only encode the product of sigma^x along the
/// covering path of the given style; Pauli tables on every patch.
Network cat_state_qgn(const LatticeSpec& lattice, PathStyle style);

/// Singlet pairs (i, n-1-i), n even.
Vector rainbow_state(int n);

/// chi = 1, V = 1, "b<i>" = Theta_i, "bd<i>" = conj(Theta_i).
Network coherent_qgn(std::shared_ptr<const PatchGraph> graph, const std::vector<cplx>& theta);

/// chi = 1 + n_f, V = 1, "c<i>" has entries (alpha, 0) = (-1)^(alpha-1) Phi_{alpha i}
/// and "cd<i>" is its adjoint. Throws ConstructionError unless Phi Phi^dag = 1.
Network slater_qgn(std::shared_ptr<const PatchGraph> graph, const Matrix& phi);

}  // namespace qgn
