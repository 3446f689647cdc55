#include "qgn/fock.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace qgn {

ExactPropagator::ExactPropagator(SparseOperator H, KrylovOptions opts)
    : H_(std::move(H)), opts_(opts) {
  if (H_.rows() != H_.cols()) throw ContractViolation("Hamiltonian must be square");
  const double res = hermiticity_residual(H_);
  if (res > 1e-10)
    throw ContractViolation("Hamiltonian is not Hermitian (residual " + std::to_string(res) + ")");
  dense_ = H_.rows() < opts_.dense_threshold;
  if (dense_) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(Matrix(H_.matrix));
    evals_ = es.eigenvalues();
    evecs_ = es.eigenvectors();
  }
}

Vector ExactPropagator::evolve(const Vector& psi, double t) const {
  if (psi.size() != H_.rows()) throw ContractViolation("state dimension does not match Hamiltonian");
  if (t == 0.0) return psi;
  if (dense_) {
    Vector coeff = evecs_.adjoint() * psi;
    coeff.array() *= (-I_unit * t * evals_.cast<cplx>()).array().exp();
    return evecs_ * coeff;
  }
  return krylov_evolve(psi, t);
}

Vector ExactPropagator::krylov_evolve(const Vector& psi, double t) const {
  const Index N = H_.rows();
  const int m_max = static_cast<int>(std::min<Index>(opts_.krylov_dim, N));
  Vector w = psi;
  double done = 0.0;
  double tau = t;
  int substeps = 0;
  Matrix V(N, m_max + 1);
  while (std::abs(t - done) > 1e-15 * std::abs(t)) {
    const double beta0 = w.norm();
    if (beta0 == 0.0) return w;
    V.col(0) = w / beta0;
    RealVector alpha(m_max), beta(m_max);
    int m = m_max;
    bool happy = false;
    for (int j = 0; j < m_max; ++j) {
      Vector u = H_.matrix * V.col(j);
      alpha[j] = V.col(j).dot(u).real();
      for (int pass = 0; pass < 2; ++pass) {
        Vector proj = V.leftCols(j + 1).adjoint() * u;
        u.noalias() -= V.leftCols(j + 1) * proj;
      }
      beta[j] = u.norm();
      if (beta[j] < 1e-13 * std::max(1.0, std::abs(alpha[j]))) {
        m = j + 1;
        happy = true;
        break;
      }
      V.col(j + 1) = u / beta[j];
    }
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
    for (int j = 0; j < m; ++j) {
      T(j, j) = alpha[j];
      if (j + 1 < m) T(j, j + 1) = T(j + 1, j) = beta[j];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
    const Eigen::MatrixXd& S = es.eigenvectors();
    const RealVector& theta = es.eigenvalues();

    const double remaining = t - done;
    if (std::abs(tau) > std::abs(remaining)) tau = remaining;
    Vector c;
    while (true) {
      Vector phase = (-I_unit * tau * theta.cast<cplx>()).array().exp();
      c = S.cast<cplx>() * (phase.cwiseProduct(S.row(0).transpose().cast<cplx>()));
      const double err = happy ? 0.0 : beta0 * beta[m - 1] * std::abs(c[m - 1]);
      if (err <= opts_.tolerance) break;
      tau *= 0.5;
      if (std::abs(tau) < 1e-14 * std::abs(t))
        throw ToleranceError("Krylov propagation failed to converge");
    }
    w = beta0 * (V.leftCols(m) * c);
    done += tau;
    if (++substeps > opts_.max_substeps)
      throw ToleranceError("Krylov propagation exceeded the substep limit");
    tau *= 1.5;
  }
  return w;
}

Vector exact_evolve(const Vector& psi, const SparseOperator& H, double t, KrylovOptions opts) {
  if (t == 0.0) {
    if (hermiticity_residual(H) > 1e-10) throw ContractViolation("Hamiltonian is not Hermitian");
    return psi;
  }
  return ExactPropagator(H, opts).evolve(psi, t);
}

}  // namespace qgn
