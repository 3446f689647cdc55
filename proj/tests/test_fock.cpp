#include "oracles.hpp"
#include "qgn/fock.hpp"

#include <doctest.h>

#include <bit>

using namespace qgn;

namespace {

// Dense full-space matrix of a sparse operator on a sector basis.
oracle::Mat lift(const SparseOperator& op, const Basis& dom, const Basis& cod, int n) {
  const Index d = Index{1} << n;
  oracle::Mat out = oracle::Mat::Zero(d, d);
  Matrix m = Matrix(op.matrix);
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c) out(static_cast<Index>(cod.state(r)), static_cast<Index>(dom.state(c))) = m(r, c);
  return out;
}

oracle::Mat restrict_to(const oracle::Mat& A, const Basis& b) {
  oracle::Mat out(b.size(), b.size());
  for (Index r = 0; r < b.size(); ++r)
    for (Index c = 0; c < b.size(); ++c) out(r, c) = A(static_cast<Index>(b.state(r)), static_cast<Index>(b.state(c)));
  return out;
}

double max_abs(const oracle::Mat& a) { return a.size() ? a.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

TEST_SUITE("fock") {
  TEST_CASE("fixed-weight enumeration") {
    auto s = fixed_weight_states(6, 3);
    CHECK(s.size() == 20);
    CHECK(std::is_sorted(s.begin(), s.end()));
    for (Bits b : s) CHECK(std::popcount(b) == 3);
    CHECK(fixed_weight_states(4, 0) == std::vector<Bits>{0});
  }

  TEST_CASE("basis indexing") {
    auto b = build_basis(BasisKind::fermion, 8, 4);
    CHECK(b.size() == 70);
    for (Index i = 0; i < b.size(); ++i) CHECK(b.index(b.state(i)) == i);
    CHECK(b.index(0b1) == -1);
    auto full = build_basis(BasisKind::spin, 5);
    CHECK(full.size() == 32);
    CHECK(full.index(17) == 17);
    CHECK_THROWS_AS(build_basis(BasisKind::spin, 4, 2), InvalidSector);
    CHECK_THROWS_AS(build_basis(BasisKind::fermion, 4, 5), InvalidSector);
    CHECK_THROWS_AS(build_basis(BasisKind::fermion, 0), InvalidLattice);
    CHECK_THROWS_AS(build_basis(BasisKind::fermion, 29), InvalidLattice);
  }

  TEST_CASE("fermion operators match Jordan-Wigner Kronecker products") {
    const int n = 5;
    auto full = build_basis(BasisKind::fermion, n);
    for (int s = 0; s < n; ++s) {
      auto c = fermion_op(full, s, Ladder::annihilate);
      auto cd = fermion_op(full, s, Ladder::create);
      CHECK(max_abs(lift(c, full, full, n) - oracle::annihilator(n, s)) < 1e-15);
      CHECK(max_abs(lift(cd, full, full, n) - oracle::annihilator(n, s).adjoint()) < 1e-15);
      CHECK(max_abs(lift(number_op(full, s), full, full, n) - oracle::number(n, s)) < 1e-15);
    }
  }

  TEST_CASE("sector ladder operators map between adjacent sectors") {
    const int n = 6;
    auto b = build_basis(BasisKind::fermion, n, 3);
    for (int s = 0; s < n; ++s) {
      auto cod = fermion_op_codomain(b, Ladder::create);
      CHECK(cod.sector() == 4);
      oracle::Mat P = oracle::Mat::Zero(1 << n, 1 << n);
      for (Index i = 0; i < b.size(); ++i) P(static_cast<Index>(b.state(i)), static_cast<Index>(b.state(i))) = 1.0;
      CHECK(max_abs(lift(fermion_op(b, s, Ladder::create), b, cod, n) - oracle::annihilator(n, s).adjoint() * P) < 1e-15);
    }
    CHECK_THROWS_AS(fermion_op(build_basis(BasisKind::fermion, 3, 3), 0, Ladder::create), InvalidSector);
  }

  TEST_CASE("canonical anticommutation relations") {
    const int n = 4;
    auto full = build_basis(BasisKind::fermion, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        Matrix ci = Matrix(fermion_op(full, i, Ladder::annihilate).matrix);
        Matrix cj = Matrix(fermion_op(full, j, Ladder::annihilate).matrix);
        Matrix ac = ci * cj.adjoint() + cj.adjoint() * ci;
        Matrix want = i == j ? Matrix(Matrix::Identity(16, 16)) : Matrix(Matrix::Zero(16, 16));
        CHECK((ac - want).cwiseAbs().maxCoeff() < 1e-15);
        CHECK((ci * cj + cj * ci).cwiseAbs().maxCoeff() < 1e-15);
      }
  }

  TEST_CASE("Pauli operators in both frames") {
    const int n = 4;
    auto z = build_basis(BasisKind::spin, n);
    auto x = build_basis(BasisKind::spin, n, {}, PauliFrame::x);
    const std::pair<Axis, char> axes[] = {{Axis::x, 'x'}, {Axis::y, 'y'}, {Axis::z, 'z'}};
    for (int s = 0; s < n; ++s)
      for (auto [a, c] : axes) {
        CHECK(max_abs(lift(pauli_op(z, s, a), z, z, n) - oracle::pauli(n, s, c)) < 1e-15);
        CHECK(max_abs(lift(pauli_op(x, s, a), x, x, n) - oracle::pauli_xframe(n, s, c)) < 1e-15);
      }
    CHECK_THROWS_AS(pauli_op(build_basis(BasisKind::fermion, 3), 0, Axis::x), KindMismatch);
    CHECK_THROWS_AS(fermion_op(z, 0, Ladder::create), KindMismatch);
  }

  TEST_CASE("Fermi Hamiltonian equals the dense oracle") {
    for (double V : {0.0, 1.0, 2.5}) {
      auto lat = LatticeSpec::chain(6, true);
      auto g = build_nn_patch_graph(lat);
      auto b = build_basis(BasisKind::fermion, 6, 3);
      auto H = build_full_hamiltonian(FermiModel{V}, g, b);
      CHECK(hermiticity_residual(H) < 1e-15);
      CHECK(max_abs(Matrix(H.matrix) - restrict_to(oracle::fermi_hamiltonian(6, lat.bonds(), V), b)) < 1e-14);
    }
    auto lat = LatticeSpec::square(2, 3, false);
    auto g = build_nn_patch_graph(lat);
    auto b = build_basis(BasisKind::fermion, 6, 2);
    auto H = build_full_hamiltonian(FermiModel{1.0}, g, b);
    CHECK(max_abs(Matrix(H.matrix) - restrict_to(oracle::fermi_hamiltonian(6, lat.bonds(), 1.0), b)) < 1e-14);
  }

  TEST_CASE("local Fermi terms sum to the full Hamiltonian") {
    auto g = build_nn_patch_graph(LatticeSpec::chain(5, true));
    auto b = build_basis(BasisKind::fermion, 5, 2);
    auto locals = build_local_hamiltonians(FermiModel{0.7}, g, b);
    CHECK(locals.size() == 5);
    SparseMatrix sum(b.size(), b.size());
    for (auto& [I, op] : locals) sum += op.matrix;
    CHECK((Matrix(sum) - Matrix(build_full_hamiltonian(FermiModel{0.7}, g, b).matrix)).cwiseAbs().maxCoeff() < 1e-15);
  }

  TEST_CASE("Ising Hamiltonian with fields split over patches") {
    auto lat = LatticeSpec::square(3, 3, true);
    auto g = build_nn_patch_graph(lat);
    for (auto frame : {PauliFrame::z, PauliFrame::x}) {
      auto b = build_basis(BasisKind::spin, 9, {}, frame);
      auto H = build_full_hamiltonian(IsingModel{3.0}, g, b);
      CHECK(max_abs(Matrix(H.matrix) - oracle::ising_hamiltonian(9, lat.bonds(), 3.0, frame == PauliFrame::x)) < 1e-13);
    }
  }

  TEST_CASE("model and basis kinds must agree") {
    auto g = build_nn_patch_graph(LatticeSpec::chain(4, true));
    CHECK_THROWS_AS(build_full_hamiltonian(FermiModel{1.0}, g, build_basis(BasisKind::spin, 4)), KindMismatch);
    CHECK_THROWS_AS(build_full_hamiltonian(IsingModel{1.0}, g, build_basis(BasisKind::fermion, 4)), KindMismatch);
    auto single = build_single_site_patch_graph(LatticeSpec::chain(4, false));
    CHECK_THROWS_AS(build_full_hamiltonian(IsingModel{1.0}, single, build_basis(BasisKind::spin, 4)),
                    ContractViolation);
  }

  TEST_CASE("BitOperator algebra") {
    Statistics st{BasisKind::fermion, PauliFrame::z};
    auto cd = BitOperator::site(st, {SiteOpKind::create, 2});
    auto c = BitOperator::site(st, {SiteOpKind::annihilate, 2});
    auto n = cd * c;
    auto b = build_basis(BasisKind::fermion, 4);
    CHECK((Matrix(to_sparse(n, b).matrix) - Matrix(number_op(b, 2).matrix)).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((Matrix(to_sparse(cd.adjoint(), b).matrix) - Matrix(to_sparse(c, b).matrix)).cwiseAbs().maxCoeff() < 1e-15);
    auto sum = (2.0 * n) + BitOperator::identity(st);
    std::vector<std::pair<cplx, Bits>> out;
    sum.apply(0b0100, out);
    cplx total = 0;
    for (auto [a, img] : out)
      if (img == 0b0100) total += a;
    CHECK(std::abs(total - 3.0) < 1e-15);
  }

  TEST_CASE("Krylov and dense propagators agree with the dense oracle") {
    auto lat = LatticeSpec::chain(10, true);
    auto g = build_nn_patch_graph(lat);
    auto b = build_basis(BasisKind::fermion, 10, 5);
    auto H = build_full_hamiltonian(FermiModel{1.0}, g, b);
    Vector psi0 = Vector::Zero(b.size());
    psi0[b.index(0b0101010101)] = 1.0;
    KrylovOptions kry;
    kry.dense_threshold = 0;
    ExactPropagator K(H, kry);
    ExactPropagator D(H);
    CHECK_FALSE(K.dense());
    CHECK(D.dense());
    Vector full0 = oracle::basis_state(10, 0b0101010101);
    oracle::Mat Hd = oracle::fermi_hamiltonian(10, lat.bonds(), 1.0);
    for (double t : {0.3, 1.7, 4.0}) {
      Vector a = K.evolve(psi0, t), d = D.evolve(psi0, t);
      Vector ref = oracle::evolve(Hd, full0, t);
      double err = 0.0;
      for (Index i = 0; i < b.size(); ++i) err = std::max(err, std::abs(a[i] - ref[static_cast<Index>(b.state(i))]));
      CHECK(err < 1e-10);
      CHECK((a - d).norm() < 1e-10);
      CHECK(std::abs(a.norm() - 1.0) < 1e-12);
    }
    CHECK((exact_evolve(psi0, H, 0.0) - psi0).norm() == 0.0);
  }

  TEST_CASE("exact evolution rejects non-Hermitian generators") {
    SparseMatrix m(2, 2);
    m.insert(0, 1) = 1.0;
    CHECK_THROWS_AS(exact_evolve(Vector::Ones(2), SparseOperator{m, false}, 1.0), ContractViolation);
  }

  TEST_CASE("free-fermion correlation matrix equals the many-body evolution") {
    const int n = 8;
    auto lat = LatticeSpec::chain(n, true);
    Bits occ0 = 0b01010101;
    Matrix h = hopping_matrix(lat);
    oracle::Mat H = oracle::fermi_hamiltonian(n, lat.bonds(), 0.0);
    for (double t : {0.5, 2.0}) {
      Matrix C = free_fermion_evolve(h, occupation_correlation_matrix(n, occ0), t);
      Vector psi = oracle::evolve(H, oracle::basis_state(n, occ0), t);
      double err = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          cplx want = oracle::expect(oracle::annihilator(n, i).adjoint() * oracle::annihilator(n, j), psi);
          err = std::max(err, std::abs(C(i, j) - want));
        }
      CHECK(err < 1e-12);
    }
  }

  TEST_CASE("free-fermion evolution with complex hopping") {
    // With complex h the transpose/conjugate placement matters.
    const int n = 4;
    Matrix h = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      h(i, (i + 1) % n) = std::polar(1.0, 0.4);
      h((i + 1) % n, i) = std::polar(1.0, -0.4);
    }
    oracle::Mat H = oracle::Mat::Zero(16, 16);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (h(i, j) != 0.0) H += h(i, j) * oracle::annihilator(n, i).adjoint() * oracle::annihilator(n, j);
    Matrix C = free_fermion_evolve(h, occupation_correlation_matrix(n, 0b0011), 0.9);
    Vector psi = oracle::evolve(H, oracle::basis_state(n, 0b0011), 0.9);
    double err = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        err = std::max(err, std::abs(C(i, j) - oracle::expect(oracle::annihilator(n, i).adjoint() *
                                                                  oracle::annihilator(n, j), psi)));
    CHECK(err < 1e-12);
  }

  TEST_CASE("site occupations") {
    auto b = build_basis(BasisKind::fermion, 4, 2);
    Vector psi = Vector::Zero(b.size());
    psi[b.index(0b0011)] = std::sqrt(0.25);
    psi[b.index(0b1100)] = std::sqrt(0.75);
    auto n = site_occupations(b, psi);
    CHECK(n[0] == doctest::Approx(0.25));
    CHECK(n[3] == doctest::Approx(0.75));
  }
}
