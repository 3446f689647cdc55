#include "qgn/fock.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>

namespace qgn {

std::vector<BitOperator> local_hamiltonian_terms(const Model& model, const PatchGraph& graph,
                                                 Statistics stats) {
  for (const auto& p : graph.patches())
    if (p.size() != 2) throw ContractViolation("local Hamiltonians need nearest-neighbour pair patches");
  std::vector<BitOperator> out;
  out.reserve(graph.patch_count());
  if (const auto* f = std::get_if<FermiModel>(&model)) {
    if (stats.kind != BasisKind::fermion) throw KindMismatch("Fermi model needs a fermion basis");
    for (const auto& p : graph.patches()) {
      const int i = p[0], j = p[1];
      BitOperator h(stats, {OpTerm{-1.0, {{SiteOpKind::create, i}, {SiteOpKind::annihilate, j}}},
                            OpTerm{-1.0, {{SiteOpKind::create, j}, {SiteOpKind::annihilate, i}}}});
      if (f->V != 0.0) h += BitOperator(stats, {OpTerm{f->V, {{SiteOpKind::number, i}, {SiteOpKind::number, j}}}});
      out.push_back(std::move(h));
    }
  } else {
    const auto& m = std::get<IsingModel>(model);
    if (stats.kind != BasisKind::spin) throw KindMismatch("Ising model needs a spin basis");
    for (const auto& p : graph.patches()) {
      const int i = p[0], j = p[1];
      const double hi = m.h / static_cast<double>(graph.patches_containing(i).size());
      const double hj = m.h / static_cast<double>(graph.patches_containing(j).size());
      BitOperator h(stats, {OpTerm{-1.0, {{SiteOpKind::pauli_z, i}, {SiteOpKind::pauli_z, j}}},
                            OpTerm{-hi, {{SiteOpKind::pauli_x, i}}},
                            OpTerm{-hj, {{SiteOpKind::pauli_x, j}}}});
      out.push_back(std::move(h));
    }
  }
  return out;
}

std::vector<std::pair<int, SparseOperator>> build_local_hamiltonians(const Model& model,
                                                                      const PatchGraph& graph,
                                                                      const Basis& basis) {
  if (basis.n_sites() != graph.site_count()) throw ContractViolation("basis and patch graph sizes differ");
  auto terms = local_hamiltonian_terms(model, graph, Statistics::of(basis));
  std::vector<std::pair<int, SparseOperator>> out;
  for (int I = 0; I < static_cast<int>(terms.size()); ++I) {
    auto op = to_sparse(terms[I], basis);
    op.hermitian = true;
    out.emplace_back(I, std::move(op));
  }
  return out;
}

SparseOperator build_full_hamiltonian(const Model& model, const PatchGraph& graph, const Basis& basis) {
  if (basis.n_sites() != graph.site_count()) throw ContractViolation("basis and patch graph sizes differ");
  BitOperator total(Statistics::of(basis));
  for (auto& t : local_hamiltonian_terms(model, graph, Statistics::of(basis))) total += t;
  auto op = to_sparse(total, basis);
  op.hermitian = true;
  return op;
}

Matrix hopping_matrix(const LatticeSpec& lattice) {
  const int n = lattice.site_count();
  Matrix h = Matrix::Zero(n, n);
  for (auto [i, j] : lattice.bonds()) {
    h(i, j) = -1.0;
    h(j, i) = -1.0;
  }
  return h;
}

double hermiticity_residual(const SparseOperator& H) {
  if (H.rows() != H.cols()) return std::numeric_limits<double>::infinity();
  const auto& A = H.matrix;
  const Index stride = A.nonZeros() > 4'000'000 ? A.rows() / 2000 + 1 : 1;
  double worst = 0.0;
  for (Index r = 0; r < A.outerSize(); r += stride)
    for (SparseMatrix::InnerIterator it(A, r); it; ++it)
      worst = std::max(worst, std::abs(it.value() - std::conj(A.coeff(it.col(), it.row()))));
  return worst;
}

Matrix free_fermion_evolve(const Matrix& h, const Matrix& C0, double t) {
  if (h.rows() != h.cols() || C0.rows() != C0.cols() || h.rows() != C0.rows())
    throw ContractViolation("hopping and correlation matrices must be square and of equal size");
  if ((h - h.adjoint()).cwiseAbs().maxCoeff() > 1e-10)
    throw ContractViolation("single-particle Hamiltonian is not Hermitian");
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  Vector phase = (-I_unit * t * es.eigenvalues().cast<cplx>()).array().exp();
  Matrix U = es.eigenvectors() * phase.asDiagonal() * es.eigenvectors().adjoint();
  // c_j(t) = sum_k U_jk c_k, hence C(t) = conj(U) C0 U^T.
  return U.conjugate() * C0 * U.transpose();
}

Matrix occupation_correlation_matrix(int n_sites, Bits occupation) {
  Matrix C = Matrix::Zero(n_sites, n_sites);
  for (int i = 0; i < n_sites; ++i)
    if ((occupation >> i) & 1) C(i, i) = 1.0;
  return C;
}

RealVector site_occupations(const Basis& basis, const Vector& psi) {
  RealVector n = RealVector::Zero(basis.n_sites());
  for (Index k = 0; k < basis.size(); ++k) {
    const double p = std::norm(psi[k]);
    if (p == 0.0) continue;
    Bits b = basis.state(k);
    for (int i = 0; i < basis.n_sites(); ++i)
      if ((b >> i) & 1) n[i] += p;
  }
  return n;
}

cplx expectation(const SparseOperator& op, const Vector& psi) {
  return psi.dot(op.matrix * psi);
}

}  // namespace qgn
