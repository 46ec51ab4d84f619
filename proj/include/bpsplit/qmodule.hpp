#pragma once

// Graded modules over exterior algebras on Q_0, Q_1, Q_2, where Q_i lowers degree by 2p^i - 1.

#include <array>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "bpsplit/errors.hpp"
#include "bpsplit/fp_linalg.hpp"
#include "bpsplit/monomials.hpp"

namespace bpsplit {

constexpr int kNumQ = 3;

// Bit i set means Q_i acts.
using QMask = uint8_t;
constexpr QMask kFullMask = 0b111;

inline QMask mask_of(std::initializer_list<int> qs) {
  QMask m = 0;
  for (int i : qs) m |= static_cast<QMask>(1u << i);
  return m;
}
inline std::vector<int> mask_indices(QMask m) {
  std::vector<int> out;
  for (int i = 0; i < kNumQ; ++i)
    if (m & (1u << i)) out.push_back(i);
  return out;
}
inline std::string mask_name(QMask m) {
  std::string s = "E(";
  bool first = true;
  for (int i : mask_indices(m)) {
    if (!first) s += ",";
    s += "Q" + std::to_string(i);
    first = false;
  }
  return s + ")";
}

struct BasisLabel {
  std::string text;
  std::optional<Monomial> monomial;
};

struct Element {
  int64_t degree;
  FpVector v;
};

class QModule {
 public:
  QModule(PrimeContext ctx, QMask mask) : ctx_(ctx), mask_(mask) {}

  const PrimeContext& ctx() const { return ctx_; }
  uint32_t p() const { return ctx_.p(); }
  QMask mask() const { return mask_; }
  bool defines(int i) const { return i >= 0 && i < kNumQ && (mask_ & (1u << i)); }
  int64_t drop(int i) const { return ctx_.q_drop(i); }

  // Degrees above top() are not determined (truncated infinite module); nullopt means exact.
  std::optional<int64_t> top() const { return top_; }

  std::vector<int64_t> degrees() const {
    std::vector<int64_t> out;
    for (const auto& [d, s] : slices_) out.push_back(d);
    return out;
  }
  bool has_degree(int64_t d) const { return slices_.count(d) != 0; }
  size_t dim(int64_t d) const {
    auto it = slices_.find(d);
    return it == slices_.end() ? 0 : it->second.labels.size();
  }
  size_t total_dim() const {
    size_t n = 0;
    for (const auto& [d, s] : slices_) n += s.labels.size();
    return n;
  }
  std::optional<int64_t> min_degree() const {
    if (slices_.empty()) return std::nullopt;
    return slices_.begin()->first;
  }
  std::optional<int64_t> max_degree() const {
    if (slices_.empty()) return std::nullopt;
    return slices_.rbegin()->first;
  }
  const std::vector<BasisLabel>& labels(int64_t d) const {
    static const std::vector<BasisLabel> kEmpty;
    auto it = slices_.find(d);
    return it == slices_.end() ? kEmpty : it->second.labels;
  }

  // Matrix of Q_i from degree d to degree d - drop(i).
  FpMatrix action(int i, int64_t d) const {
    if (!defines(i)) throw MalformedInput("Q" + std::to_string(i) + " is not defined on this module");
    auto it = slices_.find(d);
    if (it == slices_.end()) return FpMatrix(p(), dim(d - drop(i)), 0);
    return it->second.q[i];
  }
  const FpMatrix& action_ref(int i, int64_t d) const { return slices_.at(d).q[i]; }

  FpVector apply(int i, int64_t d, const FpVector& v) const {
    if (dim(d) == 0) return FpVector(dim(d - drop(i)), 0);
    return slices_.at(d).q[i].apply(v);
  }

  // Test hook: a copy with one action entry incremented.
  QModule with_fault(int i, int64_t d, size_t row, size_t col) const {
    QModule m = *this;
    FpMatrix& a = m.slices_.at(d).q[i];
    a.set(row, col, fp::add(a.at(row, col), 1, p()));
    return m;
  }

  bool operator==(const QModule& o) const {
    if (ctx_ != o.ctx_ || mask_ != o.mask_ || top_ != o.top_ || slices_.size() != o.slices_.size()) return false;
    for (const auto& [d, s] : slices_) {
      auto it = o.slices_.find(d);
      if (it == o.slices_.end() || s.labels.size() != it->second.labels.size()) return false;
      for (size_t k = 0; k < s.labels.size(); ++k)
        if (s.labels[k].text != it->second.labels[k].text) return false;
      for (int i : mask_indices(mask_))
        if (!(s.q[i] == it->second.q[i])) return false;
    }
    return true;
  }

 private:
  friend class QModuleBuilder;
  struct Slice {
    std::vector<BasisLabel> labels;
    std::array<FpMatrix, kNumQ> q;
  };
  PrimeContext ctx_;
  QMask mask_;
  std::optional<int64_t> top_;
  std::map<int64_t, Slice> slices_;
};

class QModuleBuilder {
 public:
  QModuleBuilder(PrimeContext ctx, QMask mask) : m_(ctx, mask) {}

  void add_degree(int64_t d, std::vector<BasisLabel> labels) {
    if (labels.empty()) return;
    m_.slices_[d].labels = std::move(labels);
  }
  void set_action(int i, int64_t d, FpMatrix a) { pending_[{i, d}] = std::move(a); }
  void set_top(std::optional<int64_t> t) { m_.top_ = t; }

  QModule build() {
    for (auto& [d, s] : m_.slices_)
      for (int i : mask_indices(m_.mask_)) s.q[i] = FpMatrix(m_.p(), m_.dim(d - m_.drop(i)), s.labels.size());
    for (auto& [key, a] : pending_) {
      auto [i, d] = key;
      if (!m_.defines(i)) throw MalformedInput("action given for an undefined Q");
      if (a.rows() == 0 || a.cols() == 0) continue;
      if (!m_.has_degree(d) || a.rows() != m_.dim(d - m_.drop(i)) || a.cols() != m_.dim(d))
        throw MalformedInput("action matrix dimensions inconsistent with basis at degree " + std::to_string(d));
      m_.slices_[d].q[i] = std::move(a);
    }
    return std::move(m_);
  }

 private:
  QModule m_;
  std::map<std::pair<int, int64_t>, FpMatrix> pending_;
};

struct CheckReport {
  bool ok = true;
  std::vector<std::string> failures;
  void fail(std::string s) {
    ok = false;
    failures.push_back(std::move(s));
  }
};

// Q_i^2 = 0 and Q_iQ_j + Q_jQ_i = 0 in every degree.
inline CheckReport verify_structure(const QModule& M) {
  CheckReport rep;
  auto qs = mask_indices(M.mask());
  for (int64_t d : M.degrees())
    for (size_t a = 0; a < qs.size(); ++a)
      for (size_t b = a; b < qs.size(); ++b) {
        int i = qs[a], j = qs[b];
        FpMatrix lhs = M.action(j, d - M.drop(i)) * M.action(i, d);
        if (i != j) lhs = lhs + M.action(i, d - M.drop(j)) * M.action(j, d);
        if (!lhs.is_zero())
          rep.fail(i == j ? "Q" + std::to_string(i) + "^2 != 0 at degree " + std::to_string(d)
                          : "Q" + std::to_string(i) + "Q" + std::to_string(j) + " + Q" + std::to_string(j) + "Q" +
                                std::to_string(i) + " != 0 at degree " + std::to_string(d));
      }
  return rep;
}

struct FaultSite {
  int i;
  int64_t degree;
  size_t row, col;
};

// First action entry (scan order) whose increment breaks Q_i^2 = 0 or anticommutation.
// Adding e_r to Q_i(e_c) changes Q_jQ_i(e_c) by Q_j(e_r) and Q_iQ_j(y) by (Q_j y)_c e_r, so the
// entry is detectable iff some Q_j(e_r) != 0 or some Q_j into degree d has a nonzero row c.
inline std::optional<FaultSite> first_detectable_fault(const QModule& M) {
  auto qs = mask_indices(M.mask());
  for (int64_t d : M.degrees())
    for (int i : qs) {
      int64_t td = d - M.drop(i);
      size_t rows = M.dim(td);
      for (size_t r = 0; r < rows; ++r)
        for (size_t c = 0; c < M.dim(d); ++c) {
          bool hit = false;
          for (int j : qs) {
            if (M.dim(td - M.drop(j)) > 0 && !fp::is_zero(M.action_ref(j, td).column(r))) hit = true;
            if (M.dim(d + M.drop(j)) > 0 && !fp::is_zero(M.action_ref(j, d + M.drop(j)).row(c))) hit = true;
          }
          if (hit) return FaultSite{i, d, r, c};
        }
    }
  return std::nullopt;
}

inline QModule zero_module(const PrimeContext& ctx, QMask mask) { return QModuleBuilder(ctx, mask).build(); }

inline QModule trivial_module(const PrimeContext& ctx, QMask mask, int64_t degree = 0) {
  QModuleBuilder b(ctx, mask);
  b.add_degree(degree, {{"1", Monomial::unit()}});
  return b.build();
}

// Q_i applied to a monomial by the signed Leibniz rule; Q_i(tau_b) = xi_{b-i}^{p^i} with xi_0 = 1.
inline MonomialCombination q_action_on_monomial(const PrimeContext& ctx, const AlgebraSpec& spec, int i,
                                                const Monomial& m) {
  if (i < 0 || i >= kNumQ) throw MalformedInput("Q index out of range");
  if (!in_algebra(spec, m)) throw MalformedInput("monomial " + to_string(m) + " is not in the algebra");
  MonomialCombination out;
  int position = 0;
  for (int b : m.tau_indices()) {
    if (i <= b) {
      Monomial r = m;
      r.tau &= ~(uint64_t{1} << b);
      if (b - i >= 1) r.set_xi(b - i, r.xi_exp(b - i) + static_cast<uint32_t>(ctx.pow(i)));
      out.emplace_back(r, position % 2 ? ctx.p() - 1 : 1);
    }
    ++position;
  }
  normalize(out, ctx.p());
  return out;
}

// Module spanned by monomials of A//E(i)_*; throws ClosureError if a Q-image escapes the span.
inline QModule module_from_monomials(const PrimeContext& ctx, const AlgebraSpec& spec, std::vector<Monomial> monomials,
                                     QMask mask, std::optional<int64_t> top = std::nullopt) {
  sort_canonical(ctx, monomials);
  monomials.erase(std::unique(monomials.begin(), monomials.end()), monomials.end());
  std::map<int64_t, std::vector<Monomial>> by_degree;
  for (auto& m : monomials) {
    if (!in_algebra(spec, m)) throw MalformedInput("monomial " + to_string(m) + " is not in the algebra");
    by_degree[degree(ctx, m)].push_back(m);
  }
  std::map<Monomial, size_t> index;
  for (auto& [d, ms] : by_degree)
    for (size_t k = 0; k < ms.size(); ++k) index[ms[k]] = k;

  QModuleBuilder b(ctx, mask);
  b.set_top(top);
  for (auto& [d, ms] : by_degree) {
    std::vector<BasisLabel> labels;
    for (auto& m : ms) labels.push_back({to_string(m), m});
    b.add_degree(d, std::move(labels));
  }
  for (auto& [d, ms] : by_degree)
    for (int i : mask_indices(mask)) {
      int64_t td = d - ctx.q_drop(i);
      auto tit = by_degree.find(td);
      FpMatrix a(ctx.p(), tit == by_degree.end() ? 0 : tit->second.size(), ms.size());
      for (size_t c = 0; c < ms.size(); ++c)
        for (auto& [r, coeff] : q_action_on_monomial(ctx, spec, i, ms[c])) {
          auto it = index.find(r);
          if (it == index.end() || degree(ctx, r) != td)
            throw ClosureError("Q" + std::to_string(i) + "(" + to_string(ms[c]) + ") has term " + to_string(r) +
                               " outside the span");
          a.set(it->second, c, coeff);
        }
      b.set_action(i, d, std::move(a));
    }
  return b.build();
}

// Degree relabeling without any sign change; suspend() is the public even-shift version.
inline QModule shift_degrees(const QModule& M, int64_t n) {
  QModuleBuilder b(M.ctx(), M.mask());
  if (M.top()) b.set_top(*M.top() + n);
  for (int64_t d : M.degrees()) {
    b.add_degree(d + n, M.labels(d));
    for (int i : mask_indices(M.mask())) b.set_action(i, d + n, M.action(i, d));
  }
  return b.build();
}

inline QModule suspend(const QModule& M, int64_t n) {
  if (n % 2 != 0) throw MalformedInput("odd suspension is not supported");
  return shift_degrees(M, n);
}

inline QModule restrict_mask(const QModule& M, QMask mask) {
  if ((mask & M.mask()) != mask) throw MalformedInput("cannot restrict to operators that are not defined");
  QModuleBuilder b(M.ctx(), mask);
  b.set_top(M.top());
  for (int64_t d : M.degrees()) {
    b.add_degree(d, M.labels(d));
    for (int i : mask_indices(mask)) b.set_action(i, d, M.action(i, d));
  }
  return b.build();
}

// The submodule of degrees <= max_degree (Q lowers degree, so this is closed).
inline QModule truncate(const QModule& M, int64_t max_degree) {
  QModuleBuilder b(M.ctx(), M.mask());
  b.set_top(M.top() ? std::min(*M.top(), max_degree) : max_degree);
  for (int64_t d : M.degrees()) {
    if (d > max_degree) continue;
    b.add_degree(d, M.labels(d));
    for (int i : mask_indices(M.mask())) b.set_action(i, d, M.action(i, d));
  }
  return b.build();
}

inline void require_compatible(const QModule& a, const QModule& b) {
  if (a.ctx() != b.ctx()) throw MalformedInput("modules over different primes");
  if (a.mask() != b.mask()) throw MalformedInput("modules over different exterior algebras");
}

inline QModule direct_sum(const std::vector<QModule>& Ms) {
  if (Ms.empty()) throw MalformedInput("direct sum of an empty list");
  for (auto& M : Ms) require_compatible(Ms.front(), M);
  const QModule& f = Ms.front();
  QModuleBuilder b(f.ctx(), f.mask());
  std::optional<int64_t> top;
  for (auto& M : Ms)
    if (M.top()) top = top ? std::min(*top, *M.top()) : *M.top();
  b.set_top(top);
  std::set<int64_t> degs;
  for (auto& M : Ms)
    for (int64_t d : M.degrees()) degs.insert(d);
  for (int64_t d : degs) {
    std::vector<BasisLabel> labels;
    for (auto& M : Ms)
      for (auto& l : M.labels(d)) labels.push_back(l);
    b.add_degree(d, std::move(labels));
  }
  for (int64_t d : degs)
    for (int i : mask_indices(f.mask())) {
      int64_t td = d - f.drop(i);
      size_t rows = 0, cols = 0;
      for (auto& M : Ms) rows += M.dim(td), cols += M.dim(d);
      FpMatrix a(f.p(), rows, cols);
      size_t r0 = 0, c0 = 0;
      for (auto& M : Ms) {
        if (M.dim(d) > 0 && M.dim(td) > 0) {
          FpMatrix blk = M.action(i, d);
          for (size_t r = 0; r < blk.rows(); ++r)
            for (size_t c = 0; c < blk.cols(); ++c) a.set(r0 + r, c0 + c, blk.at(r, c));
        }
        r0 += M.dim(td);
        c0 += M.dim(d);
      }
      b.set_action(i, d, std::move(a));
    }
  return b.build();
}

namespace detail {

// Basis of (M ⊗ N)_d: pairs ordered by degree of the left factor, then left index, then right index.
struct TensorIndex {
  std::vector<std::tuple<int64_t, size_t, size_t>> entries;  // (left degree, left index, right index)
  std::map<std::tuple<int64_t, size_t, size_t>, size_t> position;
};

inline TensorIndex tensor_index(const QModule& M, const QModule& N, int64_t d) {
  TensorIndex ti;
  for (int64_t dm : M.degrees()) {
    int64_t dn = d - dm;
    if (!N.has_degree(dn)) continue;
    for (size_t x = 0; x < M.dim(dm); ++x)
      for (size_t y = 0; y < N.dim(dn); ++y) {
        ti.position[{dm, x, y}] = ti.entries.size();
        ti.entries.emplace_back(dm, x, y);
      }
  }
  return ti;
}

}  // namespace detail

// Q_i(x ⊗ y) = Q_i x ⊗ y + (-1)^{|x|} x ⊗ Q_i y.
inline QModule tensor(const QModule& M, const QModule& N) {
  require_compatible(M, N);
  const uint32_t p = M.p();
  QModuleBuilder b(M.ctx(), M.mask());
  std::optional<int64_t> top;
  if (M.top() || N.top()) {
    auto bound = [](const QModule& A, const QModule& B) -> std::optional<int64_t> {
      if (!A.top() || !B.min_degree()) return std::nullopt;
      return *A.top() + *B.min_degree();
    };
    auto a = bound(M, N), c = bound(N, M);
    if (a && c) top = std::min(*a, *c);
    else top = a ? a : c;
  }
  b.set_top(top);
  std::set<int64_t> degs;
  for (int64_t dm : M.degrees())
    for (int64_t dn : N.degrees()) degs.insert(dm + dn);
  std::map<int64_t, detail::TensorIndex> idx;
  for (int64_t d : degs) {
    idx[d] = detail::tensor_index(M, N, d);
    std::vector<BasisLabel> labels;
    for (auto& [dm, x, y] : idx[d].entries)
      labels.push_back({M.labels(dm)[x].text + " (x) " + N.labels(d - dm)[y].text, std::nullopt});
    b.add_degree(d, std::move(labels));
  }
  for (int64_t d : degs)
    for (int i : mask_indices(M.mask())) {
      int64_t td = d - M.drop(i);
      auto tit = idx.find(td);
      if (tit == idx.end()) continue;
      const auto& src = idx[d];
      const auto& tgt = tit->second;
      FpMatrix a(p, tgt.entries.size(), src.entries.size());
      for (size_t c = 0; c < src.entries.size(); ++c) {
        auto [dm, x, y] = src.entries[c];
        int64_t dn = d - dm;
        if (M.dim(dm - M.drop(i)) > 0) {
          const FpMatrix& qm = M.action_ref(i, dm);
          for (size_t r = 0; r < qm.rows(); ++r)
            if (uint32_t v = qm.at(r, x)) a.add_to(tgt.position.at({dm - M.drop(i), r, y}), c, v);
        }
        if (N.dim(dn - N.drop(i)) > 0) {
          const FpMatrix& qn = N.action_ref(i, dn);
          bool odd = ((dm % 2) + 2) % 2 == 1;
          for (size_t r = 0; r < qn.rows(); ++r)
            if (uint32_t v = qn.at(r, y)) a.add_to(tgt.position.at({dm, x, r}), c, odd ? fp::neg(v, p) : v);
        }
      }
      b.set_action(i, d, std::move(a));
    }
  return b.build();
}

// Graded linear map source_d -> target_{d+shift} commuting with the Q-actions.
class QModuleMap {
 public:
  QModuleMap(std::shared_ptr<const QModule> source, std::shared_ptr<const QModule> target, int64_t shift)
      : source_(std::move(source)), target_(std::move(target)), shift_(shift) {
    if (shift_ % 2 != 0) throw MalformedInput("map shifts must be even");
    if (source_->ctx() != target_->ctx()) throw MalformedInput("maps between modules over different primes");
  }

  static QModuleMap identity(std::shared_ptr<const QModule> M) {
    QModuleMap f(M, M, 0);
    for (int64_t d : M->degrees()) f.set_matrix(d, FpMatrix::identity(M->p(), M->dim(d)));
    return f;
  }

  const QModule& source() const { return *source_; }
  const QModule& target() const { return *target_; }
  std::shared_ptr<const QModule> source_ptr() const { return source_; }
  std::shared_ptr<const QModule> target_ptr() const { return target_; }
  int64_t shift() const { return shift_; }

  void set_matrix(int64_t d, FpMatrix m) { matrices_[d] = std::move(m); }
  const std::map<int64_t, FpMatrix>& stored() const { return matrices_; }

  FpMatrix matrix(int64_t d) const {
    auto it = matrices_.find(d);
    if (it != matrices_.end()) return it->second;
    return FpMatrix(source_->p(), target_->dim(d + shift_), source_->dim(d));
  }

  FpVector apply(int64_t d, const FpVector& v) const { return matrix(d).apply(v); }

  // this ∘ g
  QModuleMap after(const QModuleMap& g) const {
    QModuleMap h(g.source_, target_, g.shift_ + shift_);
    for (int64_t d : g.source_->degrees()) h.set_matrix(d, matrix(d + g.shift_) * g.matrix(d));
    return h;
  }

 private:
  std::shared_ptr<const QModule> source_, target_;
  int64_t shift_;
  std::map<int64_t, FpMatrix> matrices_;
};

// Dimension consistency and f∘Q_i = Q_i∘f for the operators defined on both sides.
inline CheckReport verify_map(const QModuleMap& f) {
  CheckReport rep;
  const QModule& S = f.source();
  const QModule& T = f.target();
  for (auto& [d, m] : f.stored())
    if (m.rows() != T.dim(d + f.shift()) || m.cols() != S.dim(d))
      rep.fail("matrix at degree " + std::to_string(d) + " has wrong dimensions");
  if (!rep.ok) return rep;
  QMask common = S.mask() & T.mask();
  for (int64_t d : S.degrees())
    for (int i : mask_indices(common)) {
      FpMatrix lhs = f.matrix(d - S.drop(i)) * S.action(i, d);
      FpMatrix rhs = T.action(i, d + f.shift()) * f.matrix(d);
      if (!(lhs == rhs)) rep.fail("Q" + std::to_string(i) + " does not commute at source degree " + std::to_string(d));
    }
  return rep;
}

inline bool is_isomorphism(const QModuleMap& f) {
  const QModule& S = f.source();
  const QModule& T = f.target();
  std::set<int64_t> degs;
  for (int64_t d : S.degrees()) degs.insert(d);
  for (int64_t d : T.degrees()) degs.insert(d - f.shift());
  for (int64_t d : degs) {
    if (S.dim(d) != T.dim(d + f.shift())) return false;
    if (rank(f.matrix(d)) != S.dim(d)) return false;
  }
  return true;
}

using DegreeSpans = std::map<int64_t, Subspace>;

// Smallest Q-closed family of subspaces containing the given elements.
inline DegreeSpans q_closure(const QModule& M, const std::vector<Element>& elements) {
  DegreeSpans spans;
  auto span_at = [&](int64_t d) -> Subspace& {
    auto it = spans.find(d);
    if (it == spans.end()) it = spans.emplace(d, Subspace(M.p(), M.dim(d))).first;
    return it->second;
  };
  for (const auto& e : elements) {
    if (e.v.size() != M.dim(e.degree)) throw MalformedInput("element has wrong length for its degree");
    if (!fp::is_zero(e.v)) span_at(e.degree).insert(e.v);
  }
  auto degs = M.degrees();
  for (auto it = degs.rbegin(); it != degs.rend(); ++it) {
    int64_t d = *it;
    auto sit = spans.find(d);
    if (sit == spans.end()) continue;
    std::vector<FpVector> basis = sit->second.basis();
    for (int i : mask_indices(M.mask())) {
      int64_t td = d - M.drop(i);
      if (!M.has_degree(td)) continue;
      for (const auto& v : basis) {
        FpVector w = M.apply(i, d, v);
        if (!fp::is_zero(w)) span_at(td).insert(w);
      }
    }
  }
  std::erase_if(spans, [](const auto& kv) { return kv.second.dim() == 0; });
  return spans;
}

inline std::string combination_text(const QModule& M, int64_t d, const FpVector& v) {
  std::string s;
  for (size_t k = 0; k < v.size(); ++k) {
    if (v[k] == 0) continue;
    if (!s.empty()) s += " + ";
    if (v[k] != 1) s += std::to_string(v[k]) + " ";
    s += M.labels(d)[k].text;
  }
  return s.empty() ? "0" : s;
}

struct SubmoduleResult {
  std::shared_ptr<const QModule> module;
  QModuleMap inclusion;
  DegreeSpans spans;
};

struct QuotientResult {
  std::shared_ptr<const QModule> module;
  QModuleMap projection;
  DegreeSpans spans;
};

// Submodule whose degree-d part is spans[d]; the spans must be Q-closed.
inline SubmoduleResult submodule_from_spans(std::shared_ptr<const QModule> Mp, DegreeSpans spans) {
  const QModule& M = *Mp;
  QModuleBuilder b(M.ctx(), M.mask());
  b.set_top(M.top());
  for (auto& [d, S] : spans) {
    std::vector<BasisLabel> labels;
    for (const auto& v : S.basis()) {
      size_t nz = 0, at = 0;
      for (size_t k = 0; k < v.size(); ++k)
        if (v[k]) ++nz, at = k;
      if (nz == 1 && v[at] == 1) labels.push_back(M.labels(d)[at]);
      else labels.push_back({combination_text(M, d, v), std::nullopt});
    }
    b.add_degree(d, std::move(labels));
  }
  for (auto& [d, S] : spans)
    for (int i : mask_indices(M.mask())) {
      int64_t td = d - M.drop(i);
      auto tit = spans.find(td);
      FpMatrix a(M.p(), tit == spans.end() ? 0 : tit->second.dim(), S.dim());
      for (size_t c = 0; c < S.dim(); ++c) {
        FpVector w = M.apply(i, d, S.basis()[c]);
        if (fp::is_zero(w)) continue;
        if (tit == spans.end() || !tit->second.contains(w))
          throw ConsistencyError("submodule spans are not closed under Q" + std::to_string(i));
        FpVector coords = tit->second.coordinates(w);
        for (size_t r = 0; r < coords.size(); ++r) a.set(r, c, coords[r]);
      }
      b.set_action(i, d, std::move(a));
    }
  auto sub = std::make_shared<const QModule>(b.build());
  QModuleMap inc(sub, Mp, 0);
  for (auto& [d, S] : spans) inc.set_matrix(d, FpMatrix::from_columns(M.p(), M.dim(d), S.basis()));
  return {sub, std::move(inc), std::move(spans)};
}

// Quotient by Q-closed spans; basis = standard vectors at non-pivot columns, keeping M's labels.
inline QuotientResult quotient_by_spans(std::shared_ptr<const QModule> Mp, DegreeSpans spans) {
  const QModule& M = *Mp;
  std::map<int64_t, std::vector<size_t>> kept;
  for (int64_t d : M.degrees()) {
    std::vector<bool> piv(M.dim(d), false);
    auto it = spans.find(d);
    if (it != spans.end())
      for (size_t c : it->second.pivots()) piv[c] = true;
    for (size_t k = 0; k < M.dim(d); ++k)
      if (!piv[k]) kept[d].push_back(k);
  }
  auto reduce_at = [&](int64_t d, FpVector v) {
    auto it = spans.find(d);
    return it == spans.end() ? v : it->second.reduce(std::move(v));
  };
  QModuleBuilder b(M.ctx(), M.mask());
  b.set_top(M.top());
  for (auto& [d, ks] : kept) {
    std::vector<BasisLabel> labels;
    for (size_t k : ks) labels.push_back(M.labels(d)[k]);
    b.add_degree(d, std::move(labels));
  }
  for (auto& [d, ks] : kept)
    for (int i : mask_indices(M.mask())) {
      int64_t td = d - M.drop(i);
      auto tit = kept.find(td);
      if (tit == kept.end() || tit->second.empty() || ks.empty()) continue;
      FpMatrix a(M.p(), tit->second.size(), ks.size());
      FpMatrix q = M.action(i, d);
      for (size_t c = 0; c < ks.size(); ++c) {
        FpVector w = reduce_at(td, q.column(ks[c]));
        for (size_t r = 0; r < tit->second.size(); ++r) a.set(r, c, w[tit->second[r]]);
      }
      b.set_action(i, d, std::move(a));
    }
  auto quo = std::make_shared<const QModule>(b.build());
  QModuleMap proj(Mp, quo, 0);
  for (auto& [d, ks] : kept) {
    if (ks.empty()) continue;
    FpMatrix m(M.p(), ks.size(), M.dim(d));
    for (size_t c = 0; c < M.dim(d); ++c) {
      FpVector e(M.dim(d), 0);
      e[c] = 1;
      FpVector w = reduce_at(d, e);
      for (size_t r = 0; r < ks.size(); ++r) m.set(r, c, w[ks[r]]);
    }
    proj.set_matrix(d, std::move(m));
  }
  return {quo, std::move(proj), std::move(spans)};
}

inline SubmoduleResult submodule_generated(std::shared_ptr<const QModule> M, const std::vector<Element>& elements) {
  return submodule_from_spans(M, q_closure(*M, elements));
}

inline QuotientResult quotient(std::shared_ptr<const QModule> M, const std::vector<Element>& generators) {
  return quotient_by_spans(M, q_closure(*M, generators));
}

inline Element basis_element(const QModule& M, int64_t d, size_t k) {
  FpVector v(M.dim(d), 0);
  v.at(k) = 1;
  return {d, std::move(v)};
}

// Locates a monomial label; nullopt when absent.
inline std::optional<Element> find_monomial(const QModule& M, const Monomial& m) {
  int64_t d = degree(M.ctx(), m);
  const auto& ls = M.labels(d);
  for (size_t k = 0; k < ls.size(); ++k)
    if (ls[k].monomial && *ls[k].monomial == m) return basis_element(M, d, k);
  return std::nullopt;
}

// Q^I for a subset I (bitmask), ordered Q_{i1}Q_{i2}... with i1 < i2 < ...
inline int64_t subset_drop(const QModule& M, unsigned I) {
  int64_t s = 0;
  for (int i = 0; i < kNumQ; ++i)
    if (I & (1u << i)) s += M.drop(i);
  return s;
}

// Matrix of Q^I from degree d (applies the largest index first).
inline FpMatrix monomial_action(const QModule& M, unsigned I, int64_t d) {
  FpMatrix acc = FpMatrix::identity(M.p(), M.dim(d));
  int64_t cur = d;
  for (int i = kNumQ - 1; i >= 0; --i)
    if (I & (1u << i)) {
      acc = M.action(i, cur) * acc;
      cur -= M.drop(i);
    }
  return acc;
}

// Sign of Q_i Q^I = sign * Q^{I ∪ {i}} for i not in I.
inline int insertion_sign(int i, unsigned I) {
  int below = std::popcount(I & ((1u << i) - 1));
  return below % 2 ? -1 : 1;
}

inline std::string subset_name(unsigned I) {
  std::string s;
  for (int i = 0; i < kNumQ; ++i)
    if (I & (1u << i)) s += "Q" + std::to_string(i);
  return s;
}

// Free module over E(mask) on generators at the given degrees; basis Q^I g ordered by generator then I.
inline QModule free_module(const PrimeContext& ctx, QMask mask, const std::vector<int64_t>& gen_degrees,
                           const std::vector<std::string>& gen_names = {}) {
  std::map<int64_t, std::vector<std::pair<size_t, unsigned>>> basis;
  std::vector<unsigned> subsets;
  for (unsigned I = 0; I < 8; ++I)
    if ((I & mask) == I) subsets.push_back(I);
  auto drop_of = [&](unsigned I) {
    int64_t s = 0;
    for (int i = 0; i < kNumQ; ++i)
      if (I & (1u << i)) s += ctx.q_drop(i);
    return s;
  };
  for (size_t g = 0; g < gen_degrees.size(); ++g)
    for (unsigned I : subsets) basis[gen_degrees[g] - drop_of(I)].emplace_back(g, I);
  QModuleBuilder b(ctx, mask);
  std::map<int64_t, std::map<std::pair<size_t, unsigned>, size_t>> pos;
  for (auto& [d, es] : basis) {
    std::sort(es.begin(), es.end());
    std::vector<BasisLabel> labels;
    for (size_t k = 0; k < es.size(); ++k) {
      auto [g, I] = es[k];
      std::string gname = g < gen_names.size() ? gen_names[g] : "g" + std::to_string(g);
      labels.push_back({I ? subset_name(I) + " " + gname : gname, std::nullopt});
      pos[d][es[k]] = k;
    }
    b.add_degree(d, std::move(labels));
  }
  for (auto& [d, es] : basis)
    for (int i : mask_indices(mask)) {
      int64_t td = d - ctx.q_drop(i);
      auto tit = basis.find(td);
      FpMatrix a(ctx.p(), tit == basis.end() ? 0 : tit->second.size(), es.size());
      for (size_t c = 0; c < es.size(); ++c) {
        auto [g, I] = es[c];
        if (I & (1u << i)) continue;
        int sgn = insertion_sign(i, I);
        a.set(pos[td].at({g, I | (1u << i)}), c, sgn > 0 ? 1 : ctx.p() - 1);
      }
      b.set_action(i, d, std::move(a));
    }
  return b.build();
}

// JSON form: schema tag, prime, operators, truncation, per-degree labels and row-major action matrices.
inline nlohmann::json to_json(const QModule& M) {
  nlohmann::json j;
  j["schema"] = "bpsplit.qmodule/1";
  j["prime"] = M.p();
  j["operators"] = mask_indices(M.mask());
  j["top"] = M.top() ? nlohmann::json(*M.top()) : nlohmann::json(nullptr);
  nlohmann::json degs = nlohmann::json::array();
  for (int64_t d : M.degrees()) {
    nlohmann::json e;
    e["degree"] = d;
    nlohmann::json labels = nlohmann::json::array();
    for (auto& l : M.labels(d)) labels.push_back(l.text);
    e["basis"] = labels;
    nlohmann::json acts = nlohmann::json::object();
    for (int i : mask_indices(M.mask())) {
      FpMatrix a = M.action(i, d);
      acts["Q" + std::to_string(i)] = {{"rows", a.rows()}, {"cols", a.cols()}, {"entries", a.entries()}};
    }
    e["actions"] = acts;
    degs.push_back(e);
  }
  j["degrees"] = degs;
  return j;
}

inline QModule qmodule_from_json(const nlohmann::json& j) {
  if (j.value("schema", "") != "bpsplit.qmodule/1") throw MalformedInput("unknown qmodule schema");
  PrimeContext ctx(j.at("prime").get<uint32_t>());
  QMask mask = 0;
  for (int i : j.at("operators")) mask |= static_cast<QMask>(1u << i);
  QModuleBuilder b(ctx, mask);
  if (!j.at("top").is_null()) b.set_top(j.at("top").get<int64_t>());
  for (auto& e : j.at("degrees")) {
    int64_t d = e.at("degree");
    std::vector<BasisLabel> labels;
    for (auto& t : e.at("basis")) {
      std::string s = t.get<std::string>();
      std::optional<Monomial> m;
      try {
        m = parse_monomial(s);
      } catch (const MalformedInput&) {
      }
      labels.push_back({s, m});
    }
    b.add_degree(d, std::move(labels));
    for (auto& [name, a] : e.at("actions").items()) {
      int i = std::stoi(name.substr(1));
      FpMatrix m(ctx.p(), a.at("rows"), a.at("cols"));
      auto entries = a.at("entries").get<std::vector<uint32_t>>();
      if (entries.size() != m.rows() * m.cols()) throw MalformedInput("action entry count mismatch");
      for (size_t k = 0; k < entries.size(); ++k) {
        if (entries[k] >= ctx.p()) throw MalformedInput("action entry out of range");
        m.set(k / std::max<size_t>(m.cols(), 1), k % std::max<size_t>(m.cols(), 1), entries[k]);
      }
      b.set_action(i, d, std::move(m));
    }
  }
  return b.build();
}

}  // namespace bpsplit
