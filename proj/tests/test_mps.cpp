#include "oracles.hpp"
#include "qgn/mps.hpp"

#include <doctest.h>

#include <sstream>

using namespace qgn;

namespace {

Vector dense_state(const Mps& m) {
  std::vector<std::vector<oracle::Mat>> t;
  for (const auto& site : m.sites) t.push_back(site);
  Vector v = oracle::contract_mps(t);
  return v / v.norm();
}

}  // namespace

TEST_SUITE("mps") {
  TEST_CASE("random MPS bond dimensions") {
    Mps m = random_mps(6, 2, 3, 1);
    m.validate();
    const std::vector<Index> want{1, 2, 3, 3, 3, 2, 1};
    for (int i = 0; i < 6; ++i) {
      CHECK(m.chi_left(i) == want[i]);
      CHECK(m.chi_right(i) == want[i + 1]);
      CHECK(m.phys(i) == 2);
    }
    Mps again = random_mps(6, 2, 3, 1);
    CHECK(again.sites[2][1] == m.sites[2][1]);
  }

  TEST_CASE("validation rejects malformed chains") {
    Mps m = random_mps(4, 2, 2, 3);
    Mps bad = m;
    bad.sites[1][0] = Matrix::Zero(3, 3);
    CHECK_THROWS_AS(bad.validate(), ContractViolation);
    bad = m;
    bad.sites[0][0] = Matrix::Zero(2, 2);
    bad.sites[0][1] = Matrix::Zero(2, 2);
    CHECK_THROWS_AS(bad.validate(), ContractViolation);
    CHECK_THROWS_AS(mps_canonicalize(Mps{}), ContractViolation);
  }

  TEST_CASE("simultaneous canonical form") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      Mps m = random_mps(6, 2, 3, seed);
      CanonicalMps c = mps_canonicalize(m);
      auto r = canonical_residuals(c);
      CHECK(r.left < 1e-12);
      CHECK(r.right < 1e-12);
      CHECK(r.center < 1e-12);
      CHECK(r.overlap < 1e-12);
      for (const auto& l : c.lambda) CHECK(std::abs(l.norm() - 1.0) < 1e-12);
      Vector a = dense_state(m), b = mps_to_full_state(c);
      CHECK(std::abs(std::abs(a.dot(b)) - 1.0) < 1e-12);
    }
  }

  TEST_CASE("zero Schmidt values are dropped") {
    Vector up = Vector::Zero(2), plus = Vector::Constant(2, 1.0 / std::sqrt(2.0));
    up[0] = 1.0;
    CanonicalMps c = mps_canonicalize(product_mps({up, plus, up}));
    for (const auto& l : c.lambda) CHECK(l.size() == 1);
    Mps z = product_mps({Vector::Zero(2), up});
    CHECK_THROWS_AS(mps_canonicalize(z), ContractViolation);
  }

  TEST_CASE("QGN from an MPS reproduces one- and two-site strings") {
    const char axes[] = {'x', 'y', 'z'};
    for (std::uint64_t seed = 10; seed < 14; ++seed) {
      Mps m = random_mps(6, 2, 3, seed);
      CanonicalMps c = mps_canonicalize(m);
      Network net = mps_to_qgn(c);
      Vector Psi = dense_state(m);
      CHECK(consistency_residuals(net).vpsi < 1e-12);
      for (int i = 0; i < 6; ++i)
        for (char a : axes) {
          OperatorString one{{{i, site_op_name(std::string(1, a), i)}}, {}};
          CHECK(std::abs(expectation_string(net, one) - oracle::expect(oracle::pauli(6, i, a), Psi)) < 1e-10);
          for (int j = 0; j < 6; ++j) {
            if (j == i) continue;
            for (char b : axes) {
              OperatorString two{{{i, site_op_name(std::string(1, a), i)}, {j, site_op_name(std::string(1, b), j)}}, {}};
              const cplx want = oracle::expect(oracle::pauli(6, i, a) * oracle::pauli(6, j, b), Psi);
              CHECK(std::abs(expectation_string(net, two) - want) < 1e-10);
            }
          }
        }
    }
  }

  TEST_CASE("connections are partial isometries") {
    CanonicalMps c = mps_canonicalize(random_mps(6, 2, 3, 42));
    Network net = mps_to_qgn(c);
    for (std::size_t e = 0; e < net.graph().edges().size(); ++e) {
      const int i = net.graph().edges()[e].first;
      Eigen::JacobiSVD<Matrix> svd(net.edge_connection(static_cast<int>(e)));
      const auto& s = svd.singularValues();
      const Index bond = c.lambda[i + 1].size();
      Index ones = 0;
      for (Index k = 0; k < s.size(); ++k) {
        if (std::abs(s[k] - 1.0) < 1e-8) ++ones;
        else CHECK(s[k] < 1e-8);
      }
      CHECK(ones == bond * bond);
    }
  }

  TEST_CASE("product and GHZ states") {
    Vector plus = Vector::Constant(2, 1.0 / std::sqrt(2.0));
    Network prod = mps_to_qgn(mps_canonicalize(product_mps({plus, plus, plus})));
    for (int i = 0; i < 3; ++i) {
      CHECK(prod.chi(i) == 2);
      CHECK(std::abs(mean_local_expectation(prod, i, "x") - 1.0) < 1e-14);
    }
    const int n = 5;
    Network ghz = mps_to_qgn(mps_canonicalize(ghz_mps(n)));
    OperatorString all_x;
    for (int i = 0; i < n; ++i) all_x.entries.push_back({i, site_op_name("x", i)});
    CHECK(std::abs(expectation_string(ghz, all_x) - 1.0) < 1e-12);
    OperatorString zz{{{0, "z0"}, {4, "z4"}}, {}};
    CHECK(std::abs(expectation_string(ghz, zz) - 1.0) < 1e-12);
    Vector v = mps_to_full_state(ghz_mps(n));
    CHECK(std::abs(std::abs(v[0]) - std::abs(v[v.size() - 1])) < 1e-14);
  }

  TEST_CASE("binary round-trip") {
    Mps m = random_mps(5, 3, 4, 8);
    std::stringstream ss;
    write_mps(ss, m);
    Mps back = read_mps(ss);
    REQUIRE(back.size() == m.size());
    for (int i = 0; i < m.size(); ++i)
      for (Index s = 0; s < m.phys(i); ++s) CHECK(back.sites[i][s] == m.sites[i][s]);
    std::string bytes = ss.str();
    std::stringstream bad(std::string("QGNNET01") + bytes.substr(8));
    CHECK_THROWS_AS(read_mps(bad), FormatError);
    std::stringstream cut(bytes.substr(0, bytes.size() - 5));
    CHECK_THROWS_AS(read_mps(cut), FormatError);
  }
}
