#pragma once

// Bigraded modules over P = F_p[v_i : i in a mask], |v_i| = (1, 2p^i - 1), their truncated
// minimal free resolutions, and Ext_P. The modules of interest are Ext_E(F_p, M) with the
// chain-level v-action of the Koszul complex.

#include <climits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bpsplit/ext.hpp"

namespace bpsplit {

class PolyModule {
 public:
  virtual ~PolyModule() = default;
  virtual const PrimeContext& ctx() const = 0;
  virtual QMask vars() const = 0;
  virtual int s_min() const = 0;
  // t-window of possibly nonzero cells at filtration s (empty when lo > hi).
  virtual std::pair<int64_t, int64_t> t_window(int s) const = 0;
  virtual size_t dim(int s, int64_t t) const = 0;
  // v_i : (s,t) -> (s+1, t + d_i)
  virtual FpMatrix act(int i, int s, int64_t t) const = 0;

  uint32_t p() const { return ctx().p(); }
  int64_t vdeg(int i) const { return ctx().q_drop(i); }
};

// Ext_E(F_p, M) for finite M, computed lazily from the Koszul complex.
class ExtFpModule : public PolyModule {
 public:
  explicit ExtFpModule(std::shared_ptr<const QModule> M) : K_(M) {
    if (M->top()) throw CertificationError("P-module structure needs a finite module");
  }
  const PrimeContext& ctx() const override { return K_.ctx(); }
  QMask vars() const override { return K_.mask(); }
  int s_min() const override { return 0; }
  std::pair<int64_t, int64_t> t_window(int s) const override { return K_.t_window(s); }
  size_t dim(int s, int64_t t) const override {
    if (s < 0 || K_.dim(s, t) == 0) return 0;
    return K_.cohomology(s, t).dim();
  }
  FpMatrix act(int i, int s, int64_t t) const override {
    {
      std::lock_guard<std::mutex> lock(mu_);
      auto it = acts_.find({i, s, t});
      if (it != acts_.end()) return it->second;
    }
    FpMatrix out = compute_act(i, s, t);
    std::lock_guard<std::mutex> lock(mu_);
    acts_.emplace(std::tuple{i, s, t}, out);
    return out;
  }
  const KoszulComplex& complex() const { return K_; }

 private:
  FpMatrix compute_act(int i, int s, int64_t t) const {
    size_t n = dim(s, t), m = dim(s + 1, t + vdeg(i));
    FpMatrix out(p(), m, n);
    if (n == 0 || m == 0) return out;
    const Subquotient& src = K_.cohomology(s, t);
    const Subquotient& tgt = K_.cohomology(s + 1, t + vdeg(i));
    FpMatrix v = K_.v_mult(i, s, t);
    for (size_t c = 0; c < n; ++c) {
      FpVector y = tgt.coordinates(v.apply(src.representatives()[c]));
      for (size_t r = 0; r < m; ++r) out.set(r, c, y[r]);
    }
    return out;
  }

  KoszulComplex K_;
  mutable std::mutex mu_;
  mutable std::map<std::tuple<int, int, int64_t>, FpMatrix> acts_;
};

// Explicit finite module: cells and action matrices given directly.
class TablePolyModule : public PolyModule {
 public:
  TablePolyModule(PrimeContext ctx, QMask vars) : ctx_(ctx), vars_(vars) {}

  void set_dim(int s, int64_t t, size_t n) { dims_[{s, t}] = n; }
  void set_action(int i, int s, int64_t t, FpMatrix m) { acts_[{i, s, t}] = std::move(m); }

  static TablePolyModule residue_field(PrimeContext ctx, QMask vars = kFullMask) {
    TablePolyModule T(ctx, vars);
    T.set_dim(0, 0, 1);
    return T;
  }

  const PrimeContext& ctx() const override { return ctx_; }
  QMask vars() const override { return vars_; }
  int s_min() const override { return dims_.empty() ? 0 : dims_.begin()->first.first; }
  std::pair<int64_t, int64_t> t_window(int s) const override {
    int64_t lo = INT64_MAX / 4, hi = INT64_MIN / 4;
    for (auto& [k, n] : dims_)
      if (k.first == s && n) lo = std::min(lo, k.second), hi = std::max(hi, k.second);
    return {lo, hi};
  }
  size_t dim(int s, int64_t t) const override {
    auto it = dims_.find({s, t});
    return it == dims_.end() ? 0 : it->second;
  }
  FpMatrix act(int i, int s, int64_t t) const override {
    auto it = acts_.find({i, s, t});
    if (it != acts_.end()) return it->second;
    return FpMatrix(p(), dim(s + 1, t + vdeg(i)), dim(s, t));
  }

 private:
  PrimeContext ctx_;
  QMask vars_;
  std::map<Bidegree, size_t> dims_;
  std::map<std::tuple<int, int, int64_t>, FpMatrix> acts_;
};

// Free P-module on generators at given bidegrees; basis at (s,t) is (g, α) by generator, then α
// in v_monomials order.
class FreePolyModule : public PolyModule {
 public:
  FreePolyModule(PrimeContext ctx, QMask vars) : ctx_(ctx), vars_(vars) {
    for (int i : mask_indices(vars)) {
      dmin_ = std::min(dmin_, ctx.q_drop(i));
      dmax_ = std::max(dmax_, ctx.q_drop(i));
    }
  }

  size_t add_generator(int s, int64_t t) {
    gens_.push_back({s, t});
    std::lock_guard<std::mutex> lock(mu_);
    cache_.clear();
    return gens_.size() - 1;
  }
  const std::vector<Bidegree>& generators() const { return gens_; }
  size_t rank() const { return gens_.size(); }

  const PrimeContext& ctx() const override { return ctx_; }
  QMask vars() const override { return vars_; }
  int s_min() const override {
    int m = INT_MAX;
    for (auto& g : gens_) m = std::min(m, g.first);
    return gens_.empty() ? 0 : m;
  }
  std::pair<int64_t, int64_t> t_window(int s) const override {
    int64_t lo = INT64_MAX / 4, hi = INT64_MIN / 4;
    for (auto& [gs, gt] : gens_)
      if (gs <= s) {
        lo = std::min(lo, gt + (s - gs) * dmin_);
        hi = std::max(hi, gt + (s - gs) * dmax_);
      }
    return {lo, hi};
  }
  size_t dim(int s, int64_t t) const override { return basis(s, t).size(); }

  using Key = std::pair<size_t, VExp>;
  const std::vector<Key>& basis(int s, int64_t t) const {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = cache_.find({s, t});
    if (it != cache_.end()) return it->second.first;
    std::vector<Key> b;
    for (size_t g = 0; g < gens_.size(); ++g) {
      auto [gs, gt] = gens_[g];
      for (auto& a : v_monomials(vars_, s - gs))
        if (gt + v_degree(ctx_, a) == t) b.emplace_back(g, a);
    }
    std::map<Key, size_t> idx;
    for (size_t k = 0; k < b.size(); ++k) idx[b[k]] = k;
    auto& slot = cache_[{s, t}];
    slot = {std::move(b), std::move(idx)};
    return slot.first;
  }
  std::optional<size_t> index(int s, int64_t t, const Key& k) const {
    basis(s, t);
    std::lock_guard<std::mutex> lock(mu_);
    auto& idx = cache_.at({s, t}).second;
    auto it = idx.find(k);
    if (it == idx.end()) return std::nullopt;
    return it->second;
  }

  // v^α : (s,t) -> (s + |α|, t + deg α)
  FpMatrix monomial_act(const VExp& a, int s, int64_t t) const {
    int da = 0;
    for (auto x : a) da += static_cast<int>(x);
    int64_t dt = v_degree(ctx_, a);
    const auto& src = basis(s, t);
    FpMatrix m(p(), dim(s + da, t + dt), src.size());
    for (size_t c = 0; c < src.size(); ++c) {
      VExp b = src[c].second;
      for (int i = 0; i < kNumQ; ++i) b[i] += a[i];
      m.set(*index(s + da, t + dt, {src[c].first, b}), c, 1);
    }
    return m;
  }
  FpMatrix act(int i, int s, int64_t t) const override {
    VExp a{};
    a[i] = 1;
    return monomial_act(a, s, t);
  }

 private:
  PrimeContext ctx_;
  QMask vars_;
  int64_t dmin_ = INT64_MAX / 4, dmax_ = 0;
  std::vector<Bidegree> gens_;
  mutable std::mutex mu_;
  mutable std::map<Bidegree, std::pair<std::vector<Key>, std::map<Key, size_t>>> cache_;
};

// v^α applied to x in cell (s,t) of an arbitrary module, one variable at a time.
inline FpVector apply_monomial(const PolyModule& A, const VExp& a, int s, int64_t t, FpVector x) {
  for (int i = 0; i < kNumQ; ++i)
    for (uint32_t e = 0; e < a[i]; ++e) {
      x = A.act(i, s, t).apply(x);
      ++s;
      t += A.vdeg(i);
    }
  return x;
}

struct PElement {
  int s;
  int64_t t;
  FpVector v;
};

// Minimal free resolution F_u -> ... -> F_0 -> A, exact for every cell with s <= s_max.
struct PolyResolution {
  std::shared_ptr<const PolyModule> target;
  int s_max = 0;
  int u_max = 0;
  std::vector<std::shared_ptr<FreePolyModule>> free;   // F_0 .. F_{u_max}
  std::vector<std::vector<PElement>> images;           // images of generators of F_u
  bool minimal = true;                                 // no relation has a unit entry

  // Largest u with a generator in range, or -1 for the zero module.
  int length() const {
    int L = -1;
    for (size_t u = 0; u < free.size(); ++u)
      if (free[u]->rank()) L = static_cast<int>(u);
    return L;
  }
  // Highest filtration of any generator; completeness beyond s_max is judged by the gap to it.
  int last_generator_s() const {
    int m = INT_MIN;
    for (auto& F : free)
      for (auto& g : F->generators()) m = std::max(m, g.first);
    return m;
  }
  // Empirical completeness: no generator at any stage within `margin` of the cutoff.
  bool stabilized(int margin = 2) const { return last_generator_s() <= s_max - margin; }
};

namespace detail {

// Matrix of d_u : F_u^{(s,t)} -> T^{(s,t)} where T = A (u = 0) or F_{u-1}.
inline FpMatrix poly_boundary(const PolyResolution& R, int u, int s, int64_t t) {
  const FreePolyModule& F = *R.free[u];
  const PolyModule& T = u == 0 ? *R.target : static_cast<const PolyModule&>(*R.free[u - 1]);
  const auto& basis = F.basis(s, t);
  FpMatrix m(F.p(), T.dim(s, t), basis.size());
  for (size_t c = 0; c < basis.size(); ++c) {
    const auto& [g, a] = basis[c];
    const PElement& img = R.images[u][g];
    FpVector y;
    if (u == 0)
      y = apply_monomial(T, a, img.s, img.t, img.v);
    else
      y = R.free[u - 1]->monomial_act(a, img.s, img.t).apply(img.v);
    for (size_t r = 0; r < y.size(); ++r) m.set(r, c, y[r]);
  }
  return m;
}

}  // namespace detail

inline PolyResolution resolve_poly(std::shared_ptr<const PolyModule> A, int u_max, int s_max) {
  PolyResolution R;
  R.target = A;
  R.s_max = s_max;
  R.u_max = u_max;
  for (int u = 0; u <= u_max; ++u) R.free.push_back(std::make_shared<FreePolyModule>(A->ctx(), A->vars()));
  R.images.resize(u_max + 1);
  const uint32_t p = A->p();
  for (int s = A->s_min(); s <= s_max; ++s) {
    int64_t lo = INT64_MAX / 4, hi = INT64_MIN / 4;
    auto widen = [&](std::pair<int64_t, int64_t> w) {
      if (w.first <= w.second) lo = std::min(lo, w.first), hi = std::max(hi, w.second);
    };
    widen(A->t_window(s));
    for (auto& F : R.free) widen(F->t_window(s));
    for (int64_t t = lo; t <= hi; ++t) {
      // Generators of F_0 cover A; generators of F_u cover ker d_{u-1}. Each stage sees the
      // previous stage's generators added at this same cell.
      for (int u = 0; u <= u_max; ++u) {
        Subspace target_part;
        if (u == 0) {
          size_t n = A->dim(s, t);
          if (n == 0) continue;
          target_part = Subspace(p, n);
          for (size_t k = 0; k < n; ++k) {
            FpVector e(n, 0);
            e[k] = 1;
            target_part.insert(e);
          }
        } else {
          if (R.free[u - 1]->dim(s, t) == 0) continue;
          target_part = kernel_basis(detail::poly_boundary(R, u - 1, s, t));
          if (target_part.dim() == 0) continue;
        }
        Subspace covered = image_basis(detail::poly_boundary(R, u, s, t));
        Subquotient fresh(target_part, covered);
        for (const auto& r : fresh.representatives()) {
          if (u >= 1) {
            // A relation with a component on some generator (α = 0) would be a unit entry.
            const auto& basis = R.free[u - 1]->basis(s, t);
            for (size_t k = 0; k < basis.size(); ++k)
              if (r[k] && R.free[u - 1]->generators()[basis[k].first] == Bidegree{s, t}) R.minimal = false;
          }
          R.free[u]->add_generator(s, t);
          R.images[u].push_back({s, t, r});
        }
      }
    }
  }
  return R;
}

// Generators and relations of A (the first two stages of its minimal resolution).
struct PolyPresentation {
  QMask vars;
  std::vector<Bidegree> generators;
  struct Relation {
    Bidegree at;
    std::vector<std::tuple<size_t, VExp, uint32_t>> terms;  // coefficient of v^α g
  };
  std::vector<Relation> relations;
  int s_max;  // generators and relations are complete through this filtration
  bool minimal;

  std::string relation_text(size_t k) const {
    std::string out;
    for (auto& [g, a, c] : relations[k].terms) {
      if (!out.empty()) out += " + ";
      if (c != 1) out += std::to_string(c) + " ";
      for (int i = 0; i < kNumQ; ++i)
        if (a[i]) out += "v" + std::to_string(i) + (a[i] > 1 ? "^" + std::to_string(a[i]) : "") + " ";
      out += "g" + std::to_string(g);
    }
    return out.empty() ? "0" : out;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["operators"] = mask_indices(vars);
    j["s_max"] = s_max;
    j["minimal"] = minimal;
    nlohmann::json gs = nlohmann::json::array();
    for (auto& [s, t] : generators) gs.push_back({{"s", s}, {"t", t}});
    j["generators"] = gs;
    nlohmann::json rs = nlohmann::json::array();
    for (size_t k = 0; k < relations.size(); ++k)
      rs.push_back({{"s", relations[k].at.first}, {"t", relations[k].at.second}, {"relation", relation_text(k)}});
    j["relations"] = rs;
    return j;
  }
};

inline PolyPresentation presentation(const PolyResolution& R) {
  if (R.u_max < 1) throw ConfigError("presentation needs a resolution through u = 1");
  PolyPresentation P{R.target->vars(), R.free[0]->generators(), {}, R.s_max, R.minimal};
  for (auto& img : R.images[1]) {
    PolyPresentation::Relation rel{{img.s, img.t}, {}};
    const auto& basis = R.free[0]->basis(img.s, img.t);
    for (size_t k = 0; k < basis.size(); ++k)
      if (img.v[k]) rel.terms.emplace_back(basis[k].first, basis[k].second, img.v[k]);
    P.relations.push_back(std::move(rel));
  }
  return P;
}

// Presentation of Ext_E(F_p, M) through filtration s_max.
inline PolyPresentation gr_module(std::shared_ptr<const QModule> M, int s_max) {
  auto A = std::make_shared<const ExtFpModule>(M);
  return presentation(resolve_poly(A, 1, s_max));
}

// Cokernel dimension of F_1 -> F_0 at one cell; equals dim A there when the resolution is right.
inline size_t presented_dim(const PolyResolution& R, int s, int64_t t) {
  return R.free[0]->dim(s, t) - rank(detail::poly_boundary(R, 1, s, t));
}

struct PolyExt {
  int u_max;
  std::map<std::tuple<int, int, int64_t>, size_t> dims;  // (u, r, t), nonzero only
  bool certified = true;                                   // resolution judged complete

  size_t at(int u, int r, int64_t t) const {
    auto it = dims.find({u, r, t});
    return it == dims.end() ? 0 : it->second;
  }
  size_t line_total(int u) const {
    size_t n = 0;
    for (auto& [k, v] : dims)
      if (std::get<0>(k) == u) n += v;
    return n;
  }
  // The u-line as a chart with s := r.
  BigradedDims line(int u) const {
    BigradedDims b;
    for (auto& [k, v] : dims)
      if (std::get<0>(k) == u) b.dims[{std::get<1>(k), std::get<2>(k)}] = v;
    return b;
  }
};

// Hom_P(F_u, B)^{(r,t)} = ⊕_g B^{(s_g + r, t_g + t)}; coboundary δφ = φ ∘ d.
class PolyHomComplex {
 public:
  PolyHomComplex(const PolyResolution& R, std::shared_ptr<const PolyModule> B) : R_(R), B_(std::move(B)) {}

  size_t dim(int u, int r, int64_t t) const {
    size_t n = 0;
    for (auto& [gs, gt] : R_.free[u]->generators()) n += B_->dim(gs + r, gt + t);
    return n;
  }

  FpMatrix coboundary(int u, int r, int64_t t) const {
    const auto& gens = R_.free[u]->generators();
    const auto& gens1 = R_.free[u + 1]->generators();
    std::vector<size_t> off(gens.size() + 1, 0), off1(gens1.size() + 1, 0);
    for (size_t g = 0; g < gens.size(); ++g) off[g + 1] = off[g] + B_->dim(gens[g].first + r, gens[g].second + t);
    for (size_t h = 0; h < gens1.size(); ++h)
      off1[h + 1] = off1[h] + B_->dim(gens1[h].first + r, gens1[h].second + t);
    const uint32_t p = B_->p();
    FpMatrix m(p, off1.back(), off.back());
    for (size_t h = 0; h < gens1.size(); ++h) {
      if (off1[h + 1] == off1[h]) continue;
      const PElement& img = R_.images[u + 1][h];
      const auto& basis = R_.free[u]->basis(img.s, img.t);
      for (size_t k = 0; k < basis.size(); ++k) {
        if (!img.v[k]) continue;
        const auto& [g, a] = basis[k];
        if (off[g + 1] == off[g]) continue;
        const FpMatrix& va = monomial_matrix(a, gens[g].first + r, gens[g].second + t);
        for (size_t q = 0; q < va.rows(); ++q)
          for (size_t c = 0; c < va.cols(); ++c)
            if (uint32_t y = va.at(q, c)) m.add_to(off1[h] + q, off[g] + c, fp::mul(img.v[k], y, p));
      }
    }
    return m;
  }

  std::pair<int64_t, int64_t> t_window(int u, int r) const {
    int64_t lo = INT64_MAX / 4, hi = INT64_MIN / 4;
    for (auto& [gs, gt] : R_.free[u]->generators()) {
      auto w = B_->t_window(gs + r);
      if (w.first > w.second) continue;
      lo = std::min(lo, w.first - gt);
      hi = std::max(hi, w.second - gt);
    }
    return {lo, hi};
  }

 private:
  // Matrix of v^α on B from cell (s,t).
  const FpMatrix& monomial_matrix(const VExp& a, int s, int64_t t) const {
    std::lock_guard<std::mutex> lock(mu_);
    auto key = std::tuple{a, s, t};
    auto it = mono_.find(key);
    if (it != mono_.end()) return it->second;
    size_t n = B_->dim(s, t);
    FpMatrix acc = FpMatrix::identity(B_->p(), n);
    int cs = s;
    int64_t ct = t;
    for (int i = 0; i < kNumQ; ++i)
      for (uint32_t e = 0; e < a[i]; ++e) {
        acc = B_->act(i, cs, ct) * acc;
        ++cs;
        ct += B_->vdeg(i);
      }
    return mono_.emplace(key, std::move(acc)).first->second;
  }

  const PolyResolution& R_;
  std::shared_ptr<const PolyModule> B_;
  mutable std::mutex mu_;
  mutable std::map<std::tuple<VExp, int, int64_t>, FpMatrix> mono_;
};

// Ext_P^{u,(r,t)}(A, B) for u <= u_max, r in [r_min, r_max]; R must resolve A through u_max + 1.
inline PolyExt ext_over_P2(const PolyResolution& R, std::shared_ptr<const PolyModule> B, int u_max, int r_min,
                           int r_max) {
  if (R.u_max < u_max + 1) throw ConfigError("resolution too short for the requested u range");
  if (B->vars() != R.target->vars()) throw MalformedInput("modules over different polynomial algebras");
  PolyHomComplex H(R, B);
  PolyExt out;
  out.u_max = u_max;
  out.certified = R.stabilized();
  for (int u = 0; u <= u_max; ++u)
    for (int r = r_min; r <= r_max; ++r) {
      auto [lo, hi] = H.t_window(u, r);
      for (int64_t t = lo; t <= hi; ++t) {
        if (H.dim(u, r, t) == 0) continue;
        Subspace Z = kernel_basis(H.coboundary(u, r, t));
        Subspace Bd = u > 0 ? image_basis(H.coboundary(u - 1, r, t)) : Subspace(B->p(), H.dim(u, r, t));
        size_t n = Subquotient(Z, Bd).dim();
        if (n) out.dims[{u, r, t}] = n;
      }
    }
  return out;
}

struct DepthReport {
  int projective_dimension;             // length of the minimal resolution in range
  std::vector<Bidegree> socle;          // cells with elements killed by every v_i
  bool stabilized;
  bool socle_empty() const { return socle.empty(); }
};

inline DepthReport projective_dimension(const PolyResolution& R) {
  DepthReport rep{R.length(), {}, R.stabilized()};
  const PolyModule& A = *R.target;
  for (int s = A.s_min(); s <= R.s_max; ++s) {
    auto [lo, hi] = A.t_window(s);
    for (int64_t t = lo; t <= hi; ++t) {
      size_t n = A.dim(s, t);
      if (n == 0) continue;
      // Common kernel of the v_i: kernel of the stacked action matrices.
      std::vector<FpMatrix> acts;
      size_t rows = 0;
      for (int i : mask_indices(A.vars())) {
        acts.push_back(A.act(i, s, t));
        rows += acts.back().rows();
      }
      FpMatrix stacked(A.p(), rows, n);
      size_t r0 = 0;
      for (auto& m : acts) {
        for (size_t r = 0; r < m.rows(); ++r)
          for (size_t c = 0; c < n; ++c) stacked.set(r0 + r, c, m.at(r, c));
        r0 += m.rows();
      }
      Subspace common = kernel_basis(stacked);
      if (common.dim()) rep.socle.push_back({s, t});
    }
  }
  return rep;
}

}  // namespace bpsplit
