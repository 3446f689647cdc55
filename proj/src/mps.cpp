#include "qgn/mps.hpp"

#include <Eigen/SVD>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

namespace qgn {

void Mps::validate() const {
  if (sites.empty()) throw ContractViolation("MPS has no sites");
  for (int i = 0; i < size(); ++i) {
    const auto& t = sites[i];
    if (t.empty()) throw ContractViolation("MPS site " + std::to_string(i) + " has no physical index");
    for (const auto& a : t)
      if (a.rows() != t[0].rows() || a.cols() != t[0].cols())
        throw ContractViolation("MPS site " + std::to_string(i) + " has inconsistent shapes");
    if (i + 1 < size() && chi_right(i) != chi_left(i + 1))
      throw ContractViolation("MPS bond " + std::to_string(i) + " dimensions do not match");
    for (const auto& a : t)
      if (!a.allFinite()) throw ContractViolation("MPS contains non-finite entries");
  }
  if (chi_left(0) != 1 || chi_right(size() - 1) != 1)
    throw ContractViolation("MPS boundary bond dimensions must be 1");
}

namespace {

Matrix stack_rows(const MpsTensor& t) {
  const Index r = t[0].rows(), c = t[0].cols();
  Matrix m(r * static_cast<Index>(t.size()), c);
  for (std::size_t s = 0; s < t.size(); ++s) m.middleRows(static_cast<Index>(s) * r, r) = t[s];
  return m;
}

Matrix stack_cols(const MpsTensor& t) {
  const Index r = t[0].rows(), c = t[0].cols();
  Matrix m(r, c * static_cast<Index>(t.size()));
  for (std::size_t s = 0; s < t.size(); ++s) m.middleCols(static_cast<Index>(s) * c, c) = t[s];
  return m;
}

MpsTensor split_rows(const Matrix& m, Index d) {
  const Index r = m.rows() / d;
  MpsTensor t(d);
  for (Index s = 0; s < d; ++s) t[s] = m.middleRows(s * r, r);
  return t;
}

MpsTensor split_cols(const Matrix& m, Index d) {
  const Index c = m.cols() / d;
  MpsTensor t(d);
  for (Index s = 0; s < d; ++s) t[s] = m.middleCols(s * c, c);
  return t;
}

constexpr double kSchmidtCutoff = 1e-13;

}  // namespace

CanonicalMps mps_canonicalize(const Mps& raw) {
  raw.validate();
  const int n = raw.size();
  std::vector<MpsTensor> A = raw.sites;

  for (int i = 0; i + 1 < n; ++i) {
    const Index d = static_cast<Index>(A[i].size());
    Eigen::BDCSVD<Matrix> svd(stack_rows(A[i]), Eigen::ComputeThinU | Eigen::ComputeThinV);
    A[i] = split_rows(svd.matrixU(), d);
    Matrix carry = svd.singularValues().cast<cplx>().asDiagonal() * svd.matrixV().adjoint();
    for (auto& a : A[i + 1]) a = carry * a;
  }
  double norm2 = 0.0;
  for (const auto& a : A[n - 1]) norm2 += a.squaredNorm();
  if (!(norm2 > 0.0)) throw ContractViolation("MPS encodes the zero state");
  for (auto& a : A[n - 1]) a /= std::sqrt(norm2);

  CanonicalMps out;
  out.R.resize(n);
  out.lambda.assign(n + 1, RealVector::Ones(1));
  for (int i = n - 1; i >= 1; --i) {
    const Index d = static_cast<Index>(A[i].size());
    Eigen::BDCSVD<Matrix> svd(stack_cols(A[i]), Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    Index r = 0;
    while (r < s.size() && s[r] > kSchmidtCutoff) ++r;
    if (r == 0) throw ContractViolation("MPS encodes the zero state");
    out.R[i] = split_cols(svd.matrixV().leftCols(r).adjoint(), d);
    out.lambda[i] = s.head(r);
    Matrix carry = svd.matrixU().leftCols(r) * s.head(r).cast<cplx>().asDiagonal();
    for (auto& a : A[i - 1]) a = a * carry;
  }
  out.R[0] = A[0];

  out.C.resize(n);
  out.L.resize(n);
  for (int i = 0; i < n; ++i) {
    out.C[i] = out.R[i];
    for (auto& c : out.C[i]) c = out.lambda[i].cast<cplx>().asDiagonal() * c;
    // Polar factor of C_i: equals C_i Lambda_{i+1}^{-1} without dividing by small values.
    Eigen::BDCSVD<Matrix> svd(stack_rows(out.C[i]), Eigen::ComputeThinU | Eigen::ComputeThinV);
    out.L[i] = split_rows(svd.matrixU() * svd.matrixV().adjoint(), static_cast<Index>(out.C[i].size()));
  }

  auto res = canonical_residuals(out);
  const double worst = std::max({res.left, res.right, res.center, res.overlap});
  if (worst > 1e-10)
    throw ToleranceError("canonical identities violated (residual " + std::to_string(worst) + ")");
  return out;
}

CanonicalResiduals canonical_residuals(const CanonicalMps& m) {
  CanonicalResiduals r;
  const int n = m.size();
  for (int i = 0; i < n; ++i) {
    const Index cl = m.C[i][0].rows(), cr = m.C[i][0].cols();
    Matrix left = Matrix::Zero(cr, cr), right = Matrix::Zero(cl, cl);
    double norm2 = 0.0;
    for (std::size_t s = 0; s < m.C[i].size(); ++s) {
      left += m.L[i][s].adjoint() * m.L[i][s];
      right += m.R[i][s] * m.R[i][s].adjoint();
      norm2 += m.C[i][s].squaredNorm();
    }
    r.left = std::max(r.left, (left - Matrix::Identity(cr, cr)).cwiseAbs().maxCoeff());
    r.right = std::max(r.right, (right - Matrix::Identity(cl, cl)).cwiseAbs().maxCoeff());
    r.center = std::max(r.center, std::abs(std::sqrt(norm2) - 1.0));
    if (i + 1 < n)
      for (std::size_t s = 0; s < m.C[i].size(); ++s)
        for (std::size_t t = 0; t < m.C[i + 1].size(); ++t)
          r.overlap = std::max(r.overlap, (m.L[i][s] * m.C[i + 1][t] - m.C[i][s] * m.R[i + 1][t])
                                              .cwiseAbs()
                                              .maxCoeff());
  }
  return r;
}

Network mps_to_qgn(const CanonicalMps& m) {
  const int n = m.size();
  auto graph = std::make_shared<const PatchGraph>(build_single_site_patch_graph(LatticeSpec::chain(n, false)));
  std::vector<Vector> psi(n);
  for (int i = 0; i < n; ++i) {
    const auto& C = m.C[i];
    const Index d = static_cast<Index>(C.size()), cl = C[0].rows(), cr = C[0].cols();
    psi[i].resize(cl * d * cr);
    for (Index a = 0; a < cl; ++a)
      for (Index s = 0; s < d; ++s)
        for (Index b = 0; b < cr; ++b) psi[i][(a * d + s) * cr + b] = C[s](a, b);
  }
  std::vector<Matrix> V;
  for (auto [i, j] : graph->edges()) {
    const auto& L = m.L[i];
    const auto& R = m.R[j];
    const Index d1 = static_cast<Index>(L.size()), d2 = static_cast<Index>(R.size());
    const Index a_dim = L[0].rows(), mid = L[0].cols(), c_dim = R[0].cols();
    Matrix v = Matrix::Zero(a_dim * d1 * mid, mid * d2 * c_dim);
    for (Index a = 0; a < a_dim; ++a)
      for (Index s = 0; s < d1; ++s)
        for (Index b = 0; b < mid; ++b)
          for (Index a2 = 0; a2 < mid; ++a2)
            for (Index s2 = 0; s2 < d2; ++s2)
              for (Index b2 = 0; b2 < c_dim; ++b2)
                v((a * d1 + s) * mid + b, (a2 * d2 + s2) * c_dim + b2) = L[s](a, a2) * std::conj(R[s2](b, b2));
    V.push_back(std::move(v));
  }
  Network net(graph, std::move(psi), std::move(V));
  for (int i = 0; i < n; ++i) {
    const Index d = static_cast<Index>(m.C[i].size());
    if (d != 2) continue;
    const Index cl = m.C[i][0].rows(), cr = m.C[i][0].cols();
    Matrix sx(2, 2), sy(2, 2), sz(2, 2);
    sx << 0, 1, 1, 0;
    sy << 0, -I_unit, I_unit, 0;
    sz << 1, 0, 0, -1;
    OperatorTable table;
    for (auto [name, s] : {std::pair<std::string, Matrix>{"x", sx}, {"y", sy}, {"z", sz}}) {
      Matrix full = Matrix::Zero(cl * 2 * cr, cl * 2 * cr);
      for (Index a = 0; a < cl; ++a)
        for (Index p = 0; p < 2; ++p)
          for (Index q = 0; q < 2; ++q)
            for (Index b = 0; b < cr; ++b) full((a * 2 + p) * cr + b, (a * 2 + q) * cr + b) = s(p, q);
      table[site_op_name(name, i)] = std::move(full);
    }
    net.set_operator_table(i, std::move(table));
  }
  return net;
}

namespace {

Vector contract_full(const std::vector<const MpsTensor*>& t) {
  const int n = static_cast<int>(t.size());
  // Progressive contraction: rows index the configuration of the sites so far.
  Matrix acc = Matrix::Ones(1, 1);
  Index configs = 1;
  for (int i = 0; i < n; ++i) {
    const auto& A = *t[i];
    const Index d = static_cast<Index>(A.size());
    Matrix next(configs * d, A[0].cols());
    for (Index s = 0; s < d; ++s)
      for (Index c = 0; c < configs; ++c) next.row(s * configs + c) = acc.row(c) * A[s];
    acc = std::move(next);
    configs *= d;
  }
  return acc.col(0);
}

}  // namespace

Vector mps_to_full_state(const Mps& m) {
  m.validate();
  std::vector<const MpsTensor*> t;
  for (const auto& s : m.sites) t.push_back(&s);
  return contract_full(t);
}

Vector mps_to_full_state(const CanonicalMps& m) {
  std::vector<const MpsTensor*> t;
  for (int i = 0; i < m.size(); ++i) t.push_back(i == 0 ? &m.C[0] : &m.R[i]);
  return contract_full(t);
}

Mps random_mps(int n, int d, int chi, std::uint64_t seed) {
  if (n < 1 || d < 1 || chi < 1) throw ContractViolation("random MPS needs positive sizes");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  auto bond = [&](int i) {
    double cap = std::min(std::pow(d, i), std::pow(d, n - i));
    return static_cast<Index>(std::min<double>(chi, cap));
  };
  Mps m;
  for (int i = 0; i < n; ++i) {
    MpsTensor t(d);
    for (auto& a : t) {
      a.resize(bond(i), bond(i + 1));
      for (Index r = 0; r < a.rows(); ++r)
        for (Index c = 0; c < a.cols(); ++c) a(r, c) = cplx(g(rng), g(rng));
    }
    m.sites.push_back(std::move(t));
  }
  return m;
}

Mps product_mps(const std::vector<Vector>& site_states) {
  Mps m;
  for (const auto& v : site_states) {
    MpsTensor t(v.size());
    for (Index s = 0; s < v.size(); ++s) t[s] = Matrix::Constant(1, 1, v[s]);
    m.sites.push_back(std::move(t));
  }
  return m;
}

Mps ghz_mps(int n) {
  if (n < 2) throw ContractViolation("GHZ MPS needs at least two sites");
  Mps m;
  for (int i = 0; i < n; ++i) {
    MpsTensor t(2);
    for (int s = 0; s < 2; ++s) {
      if (i == 0) {
        t[s] = Matrix::Zero(1, 2);
        t[s](0, s) = 1.0 / std::sqrt(2.0);
      } else if (i == n - 1) {
        t[s] = Matrix::Zero(2, 1);
        t[s](s, 0) = 1.0;
      } else {
        t[s] = Matrix::Zero(2, 2);
        t[s](s, s) = 1.0;
      }
    }
    m.sites.push_back(std::move(t));
  }
  return m;
}

namespace {

constexpr char kMpsMagic[8] = {'Q', 'G', 'N', 'M', 'P', 'S', '0', '1'};

template <class T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) throw FormatError("truncated MPS container");
  return v;
}

}  // namespace

void write_mps(std::ostream& os, const Mps& m) {
  m.validate();
  os.write(kMpsMagic, sizeof kMpsMagic);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(m.size()));
  for (int i = 0; i < m.size(); ++i) {
    const Index cl = m.chi_left(i), d = m.phys(i), cr = m.chi_right(i);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(cl));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(d));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(cr));
    for (Index a = 0; a < cl; ++a)
      for (Index s = 0; s < d; ++s)
        for (Index b = 0; b < cr; ++b) {
          put(os, m.sites[i][s](a, b).real());
          put(os, m.sites[i][s](a, b).imag());
        }
  }
  if (!os) throw FormatError("failed to write MPS container");
}

Mps read_mps(std::istream& is) {
  char magic[8];
  if (!is.read(magic, sizeof magic) || std::memcmp(magic, kMpsMagic, sizeof magic) != 0)
    throw FormatError("not an MPS container (bad magic)");
  const auto n = get<std::uint32_t>(is);
  if (n == 0 || n > 4096) throw FormatError("implausible MPS length");
  Mps m;
  for (std::uint32_t i = 0; i < n; ++i) {
    const auto cl = get<std::uint32_t>(is), d = get<std::uint32_t>(is), cr = get<std::uint32_t>(is);
    if (cl == 0 || d == 0 || cr == 0 || static_cast<std::uint64_t>(cl) * d * cr > (1ull << 28))
      throw FormatError("implausible MPS tensor shape at site " + std::to_string(i));
    MpsTensor t(d, Matrix(cl, cr));
    for (std::uint32_t a = 0; a < cl; ++a)
      for (std::uint32_t s = 0; s < d; ++s)
        for (std::uint32_t b = 0; b < cr; ++b) {
          double re = get<double>(is);
          double im = get<double>(is);
          t[s](a, b) = cplx(re, im);
        }
    m.sites.push_back(std::move(t));
  }
  try {
    m.validate();
  } catch (const ContractViolation& e) {
    throw FormatError(std::string("malformed MPS container: ") + e.what());
  }
  return m;
}

void save_mps(const std::string& path, const Mps& m) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open '" + path + "' for writing");
  write_mps(os, m);
}

Mps load_mps(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open '" + path + "'");
  return read_mps(is);
}

}  // namespace qgn
