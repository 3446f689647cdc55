#include "qgn/fock.hpp"

#include <algorithm>
#include <bit>

namespace qgn {

std::vector<Bits> fixed_weight_states(int n, int k) {
  std::vector<Bits> out;
  if (k < 0 || k > n) return out;
  if (k == 0) return {Bits{0}};
  const Bits end = Bits{1} << n;
  Bits x = (Bits{1} << k) - 1;
  while (x < end) {
    out.push_back(x);
    Bits c = x & (~x + 1);
    Bits r = x + c;
    x = (((r ^ x) >> 2) / c) | r;
  }
  return out;
}

Basis build_basis(BasisKind kind, int n_sites, std::optional<int> sector, PauliFrame frame) {
  if (n_sites < 1 || n_sites > 28)
    throw InvalidLattice("basis supports 1 to 28 sites, got " + std::to_string(n_sites));
  if (sector && kind == BasisKind::spin)
    throw InvalidSector("particle-number sectors are only defined for fermion bases");
  if (sector && (*sector < 0 || *sector > n_sites))
    throw InvalidSector("sector " + std::to_string(*sector) + " outside 0.." +
                        std::to_string(n_sites));
  Basis b;
  b.kind_ = kind;
  b.frame_ = frame;
  b.n_sites_ = n_sites;
  b.sector_ = sector;
  if (sector) {
    b.states_ = fixed_weight_states(n_sites, *sector);
    b.size_ = static_cast<Index>(b.states_.size());
  } else {
    b.size_ = Index{1} << n_sites;
  }
  return b;
}

Index Basis::index(Bits b) const {
  if (is_full()) return b < static_cast<Bits>(size_) ? static_cast<Index>(b) : -1;
  auto it = std::lower_bound(states_.begin(), states_.end(), b);
  if (it == states_.end() || *it != b) return -1;
  return static_cast<Index>(it - states_.begin());
}

std::pair<cplx, Bits> apply_site_op(Statistics stats, SiteOp op, Bits b) {
  const Bits mask = Bits{1} << op.site;
  const bool set = (b & mask) != 0;
  switch (op.kind) {
    case SiteOpKind::identity: return {1.0, b};
    case SiteOpKind::number: return {set ? 1.0 : 0.0, b};
    case SiteOpKind::create:
    case SiteOpKind::annihilate: {
      if (stats.kind != BasisKind::fermion)
        throw KindMismatch("ladder operators require fermion statistics");
      const bool create = op.kind == SiteOpKind::create;
      if (create == set) return {0.0, b};
      const int below = std::popcount(b & (mask - 1));
      return {(below % 2) ? -1.0 : 1.0, b ^ mask};
    }
    case SiteOpKind::pauli_x:
    case SiteOpKind::pauli_y:
    case SiteOpKind::pauli_z: {
      if (stats.kind != BasisKind::spin)
        throw KindMismatch("Pauli operators require a spin basis");
      const double diag = set ? -1.0 : 1.0;
      const bool zf = stats.frame == PauliFrame::z;
      if (op.kind == SiteOpKind::pauli_y)
        return {cplx(0.0, zf ? diag : -diag), b ^ mask};
      const bool diagonal = (op.kind == SiteOpKind::pauli_z) == zf;
      if (diagonal) return {diag, b};
      return {1.0, b ^ mask};
    }
  }
  return {0.0, b};
}

BitOperator BitOperator::site(Statistics stats, SiteOp op, cplx coeff) {
  return BitOperator(stats, {OpTerm{coeff, {op}}});
}

BitOperator BitOperator::identity(Statistics stats, cplx coeff) {
  return BitOperator(stats, {OpTerm{coeff, {}}});
}

void BitOperator::apply(Bits b, std::vector<std::pair<cplx, Bits>>& out) const {
  for (const auto& term : terms_) {
    cplx amp = term.coeff;
    Bits s = b;
    for (auto it = term.factors.rbegin(); it != term.factors.rend() && amp != 0.0; ++it) {
      auto [a, next] = apply_site_op(stats_, *it, s);
      amp *= a;
      s = next;
    }
    if (amp != 0.0) out.emplace_back(amp, s);
  }
}

BitOperator BitOperator::adjoint() const {
  BitOperator out(stats_);
  out.terms_.reserve(terms_.size());
  for (const auto& term : terms_) {
    OpTerm t{std::conj(term.coeff), {term.factors.rbegin(), term.factors.rend()}};
    for (auto& f : t.factors) {
      if (f.kind == SiteOpKind::create) f.kind = SiteOpKind::annihilate;
      else if (f.kind == SiteOpKind::annihilate) f.kind = SiteOpKind::create;
    }
    out.terms_.push_back(std::move(t));
  }
  return out;
}

BitOperator& BitOperator::operator+=(const BitOperator& o) {
  terms_.insert(terms_.end(), o.terms_.begin(), o.terms_.end());
  return *this;
}

BitOperator& BitOperator::operator*=(cplx c) {
  for (auto& t : terms_) t.coeff *= c;
  return *this;
}

BitOperator operator*(const BitOperator& a, const BitOperator& b) {
  BitOperator out(a.stats_);
  for (const auto& ta : a.terms_) {
    for (const auto& tb : b.terms_) {
      OpTerm t{ta.coeff * tb.coeff, ta.factors};
      t.factors.insert(t.factors.end(), tb.factors.begin(), tb.factors.end());
      out.terms_.push_back(std::move(t));
    }
  }
  return out;
}

SparseOperator to_sparse(const BitOperator& op, const Basis& domain, const Basis& codomain) {
  const BitOperator adj = op.adjoint();
  const Index rows = codomain.size();
  std::vector<std::vector<std::pair<Index, cplx>>> row_entries(rows);
#pragma omp parallel for schedule(dynamic, 1024)
  for (Index r = 0; r < rows; ++r) {
    std::vector<std::pair<cplx, Bits>> hits;
    adj.apply(codomain.state(r), hits);
    auto& dst = row_entries[r];
    for (auto [amp, s] : hits) {
      Index c = domain.index(s);
      if (c >= 0) dst.emplace_back(c, std::conj(amp));
    }
    std::sort(dst.begin(), dst.end(), [](auto& x, auto& y) { return x.first < y.first; });
    std::size_t w = 0;
    for (std::size_t k = 0; k < dst.size(); ++k) {
      if (w > 0 && dst[w - 1].first == dst[k].first) dst[w - 1].second += dst[k].second;
      else dst[w++] = dst[k];
    }
    dst.resize(w);
    std::erase_if(dst, [](auto& e) { return e.second == 0.0; });
  }
  SparseOperator out;
  out.matrix.resize(rows, domain.size());
  Eigen::VectorXi nnz(rows);
  for (Index r = 0; r < rows; ++r) nnz[r] = static_cast<int>(row_entries[r].size());
  out.matrix.reserve(nnz);
  for (Index r = 0; r < rows; ++r) {
    for (auto [c, v] : row_entries[r]) out.matrix.insert(r, c) = v;
    std::vector<std::pair<Index, cplx>>().swap(row_entries[r]);
  }
  out.matrix.makeCompressed();
  return out;
}

SparseOperator to_sparse(const BitOperator& op, const Basis& basis) {
  return to_sparse(op, basis, basis);
}

Basis fermion_op_codomain(const Basis& basis, Ladder mode) {
  if (basis.kind() != BasisKind::fermion)
    throw KindMismatch("fermion operators require a fermion basis");
  if (basis.is_full()) return basis;
  int target = *basis.sector() + (mode == Ladder::create ? 1 : -1);
  if (target < 0 || target > basis.n_sites())
    throw InvalidSector("no adjacent sector for this ladder operator");
  return build_basis(BasisKind::fermion, basis.n_sites(), target);
}

SparseOperator fermion_op(const Basis& basis, int site, Ladder mode) {
  if (site < 0 || site >= basis.n_sites()) throw ContractViolation("site out of range");
  Basis target = fermion_op_codomain(basis, mode);
  auto kind = mode == Ladder::create ? SiteOpKind::create : SiteOpKind::annihilate;
  return to_sparse(BitOperator::site(Statistics::of(basis), {kind, site}), basis, target);
}

SparseOperator pauli_op(const Basis& basis, int site, Axis axis) {
  if (basis.kind() != BasisKind::spin) throw KindMismatch("Pauli operators require a spin basis");
  if (site < 0 || site >= basis.n_sites()) throw ContractViolation("site out of range");
  static constexpr SiteOpKind kinds[] = {SiteOpKind::pauli_x, SiteOpKind::pauli_y,
                                         SiteOpKind::pauli_z};
  auto out = to_sparse(BitOperator::site(Statistics::of(basis), {kinds[static_cast<int>(axis)], site}),
                       basis);
  out.hermitian = true;
  return out;
}

SparseOperator number_op(const Basis& basis, int site) {
  if (site < 0 || site >= basis.n_sites()) throw ContractViolation("site out of range");
  auto out = to_sparse(BitOperator::site(Statistics::of(basis), {SiteOpKind::number, site}), basis);
  out.hermitian = true;
  return out;
}

}  // namespace qgn
