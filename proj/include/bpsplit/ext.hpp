#pragma once

// Ext over exterior algebras on Milnor primitives.
//
// Chart convention: a cochain m ⊗ v^α of the Koszul complex M ⊗ F_p[v_i : Q_i defined] sits at
// s = |α| and t = |m| + Σ α_i (2p^i - 1), so v_i has bidegree (1, 2p^i - 1). For a resolution
// F_• -> M, a cochain φ in Hom(F_s, N) of degree t sends a generator g to N_{|g| + t}.

#include <algorithm>
#include <array>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bpsplit/browngitler.hpp"
#include "bpsplit/fp_linalg.hpp"
#include "bpsplit/qmodule.hpp"

namespace bpsplit {

using Bidegree = std::pair<int, int64_t>;  // (s, t)

struct BigradedDims {
  std::map<Bidegree, size_t> dims;    // nonzero entries only
  std::map<Bidegree, std::string> tags;
  int s_max = 0;
  int64_t t_min = 0, t_max = 0;        // requested window
  std::vector<int64_t> certified_t_max;  // per s: claims hold for t <= this

  size_t at(int s, int64_t t) const {
    auto it = dims.find({s, t});
    return it == dims.end() ? 0 : it->second;
  }
  bool certified(int s, int64_t t) const {
    return s >= 0 && s <= s_max && t >= t_min && t <= t_max && static_cast<size_t>(s) < certified_t_max.size() &&
           t <= certified_t_max[s];
  }
  size_t total() const {
    size_t n = 0;
    for (auto& [k, v] : dims) n += v;
    return n;
  }
  std::string tag(int s, int64_t t) const {
    auto it = tags.find({s, t});
    if (it != tags.end()) return it->second;
    return ((t - s) % 2 + 2) % 2 ? "odd" : "even";
  }

  // TSV chart: s, t, dim, tag; ordered by s then t.
  std::string to_tsv() const {
    std::ostringstream os;
    os << "s\tt\tdim\ttag\n";
    for (auto& [k, v] : dims) os << k.first << '\t' << k.second << '\t' << v << '\t' << tag(k.first, k.second) << '\n';
    return os.str();
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["s_max"] = s_max;
    j["t_min"] = t_min;
    j["t_max"] = t_max;
    j["certified_t_max"] = certified_t_max;
    nlohmann::json cells = nlohmann::json::array();
    for (auto& [k, v] : dims) cells.push_back({{"s", k.first}, {"t", k.second}, {"dim", v}, {"tag", tag(k.first, k.second)}});
    j["cells"] = cells;
    return j;
  }
};

// Exponent vector of a v-monomial, indexed by Q index.
using VExp = std::array<uint32_t, kNumQ>;

inline int64_t v_degree(const PrimeContext& ctx, const VExp& a) {
  int64_t t = 0;
  for (int i = 0; i < kNumQ; ++i) t += static_cast<int64_t>(a[i]) * ctx.q_drop(i);
  return t;
}

// v-monomials in the variables of `mask` with total exponent s, in lexicographic order.
inline std::vector<VExp> v_monomials(QMask mask, int s) {
  std::vector<VExp> out;
  if (s < 0) return out;
  auto vars = mask_indices(mask);
  VExp cur{};
  auto rec = [&](auto&& self, size_t k, int left) -> void {
    if (k + 1 == vars.size()) {
      cur[vars[k]] = static_cast<uint32_t>(left);
      out.push_back(cur);
      cur[vars[k]] = 0;
      return;
    }
    for (int e = left; e >= 0; --e) {
      cur[vars[k]] = static_cast<uint32_t>(e);
      self(self, k + 1, left - e);
    }
    cur[vars[k]] = 0;
  };
  if (vars.empty()) {
    if (s == 0) out.push_back(cur);
    return out;
  }
  rec(rec, 0, s);
  return out;
}

// Closed-form count of v-monomials at (s, t).
inline size_t v_monomial_count(const PrimeContext& ctx, QMask mask, int s, int64_t t) {
  size_t n = 0;
  for (auto& a : v_monomials(mask, s))
    if (v_degree(ctx, a) == t) ++n;
  return n;
}

// Cochains M ⊗ F_p[v] with d = Σ Q_i ⊗ v_i and chain-level v_i multiplication.
class KoszulComplex {
 public:
  explicit KoszulComplex(std::shared_ptr<const QModule> M) : M_(std::move(M)), vars_(mask_indices(M_->mask())) {
    for (int i : vars_) {
      dmin_ = std::min(dmin_, M_->drop(i));
      dmax_ = std::max(dmax_, M_->drop(i));
    }
  }

  const QModule& module() const { return *M_; }
  QMask mask() const { return M_->mask(); }
  const PrimeContext& ctx() const { return M_->ctx(); }

  // Cohomology at (s,t) is determined by M when t - max(0, s-1) * d_min <= top.
  int64_t certified_t_max(int s) const {
    if (!M_->top()) return INT64_MAX / 4;
    return *M_->top() + std::max(0, s - 1) * (vars_.empty() ? 0 : dmin_);
  }

  // Window of t where C^{s,t} can be nonzero.
  std::pair<int64_t, int64_t> t_window(int s) const {
    if (!M_->min_degree()) return {1, 0};
    if (vars_.empty()) return s == 0 ? std::pair{*M_->min_degree(), *M_->max_degree()} : std::pair<int64_t, int64_t>{1, 0};
    return {*M_->min_degree() + s * dmin_, *M_->max_degree() + s * dmax_};
  }

  size_t dim(int s, int64_t t) const { return layout(s, t).total; }

  // d: C^{s,t} -> C^{s+1,t}
  FpMatrix differential(int s, int64_t t) const {
    const Layout& src = layout(s, t);
    const Layout& tgt = layout(s + 1, t);
    const uint32_t p = M_->p();
    FpMatrix d(p, tgt.total, src.total);
    for (size_t b = 0; b < src.blocks.size(); ++b) {
      const auto& [a, md, off] = src.blocks[b];
      for (int i : vars_) {
        VExp a2 = a;
        ++a2[i];
        auto it = tgt.offset.find(a2);
        if (it == tgt.offset.end()) continue;
        int64_t td = md - M_->drop(i);
        if (M_->dim(td) == 0) continue;
        const FpMatrix& q = M_->action_ref(i, md);
        for (size_t c = 0; c < q.cols(); ++c)
          for (size_t r = 0; r < q.rows(); ++r)
            if (uint32_t x = q.at(r, c)) d.add_to(it->second + r, off + c, x);
      }
    }
    return d;
  }

  // v_i: C^{s,t} -> C^{s+1, t + d_i}
  FpMatrix v_mult(int i, int s, int64_t t) const {
    const Layout& src = layout(s, t);
    const Layout& tgt = layout(s + 1, t + M_->drop(i));
    FpMatrix m(M_->p(), tgt.total, src.total);
    if (!M_->defines(i)) throw MalformedInput("v" + std::to_string(i) + " does not act");
    for (const auto& [a, md, off] : src.blocks) {
      VExp a2 = a;
      ++a2[i];
      size_t toff = tgt.offset.at(a2);
      for (size_t c = 0; c < M_->dim(md); ++c) m.set(toff + c, off + c, 1);
    }
    return m;
  }

  // Chain element m ⊗ v^a as a vector in C^{|a|, |m| + deg a}.
  FpVector embed(const VExp& a, int64_t m_degree, const FpVector& m) const {
    int s = 0;
    for (auto x : a) s += static_cast<int>(x);
    const Layout& L = layout(s, m_degree + v_degree(ctx(), a));
    FpVector v(L.total, 0);
    size_t off = L.offset.at(a);
    for (size_t k = 0; k < m.size(); ++k) v[off + k] = m[k];
    return v;
  }

  const Subquotient& cohomology(int s, int64_t t) const {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = coh_.find({s, t});
    if (it != coh_.end()) return it->second;
    Subspace Z = kernel_basis(differential(s, t));
    Subspace B = s > 0 ? image_basis(differential(s - 1, t)) : Subspace(M_->p(), dim(s, t));
    return coh_.emplace(Bidegree{s, t}, Subquotient(Z, B)).first->second;
  }

 private:
  struct Layout {
    std::vector<std::tuple<VExp, int64_t, size_t>> blocks;  // (exponent, M-degree, offset)
    std::map<VExp, size_t> offset;
    size_t total = 0;
  };

  const Layout& layout(int s, int64_t t) const {
    std::lock_guard<std::mutex> lock(layout_mu_);
    auto it = layouts_.find({s, t});
    if (it != layouts_.end()) return it->second;
    Layout L;
    for (auto& a : v_monomials(M_->mask(), s)) {
      int64_t md = t - v_degree(ctx(), a);
      size_t n = M_->dim(md);
      if (n == 0) continue;
      L.blocks.emplace_back(a, md, L.total);
      L.offset[a] = L.total;
      L.total += n;
    }
    return layouts_.emplace(Bidegree{s, t}, std::move(L)).first->second;
  }

  std::shared_ptr<const QModule> M_;
  std::vector<int> vars_;
  int64_t dmin_ = INT64_MAX / 4, dmax_ = 0;
  mutable std::mutex mu_, layout_mu_;
  mutable std::map<Bidegree, Layout> layouts_;
  mutable std::map<Bidegree, Subquotient> coh_;
};

// Ext^{s,t}(F_p, M) over the exterior algebra on M's operators, for s <= s_max and t <= t_max.
inline BigradedDims ext_koszul(std::shared_ptr<const QModule> M, int s_max, int64_t t_max) {
  if (M->top() && t_max > *M->top())
    throw CertificationError("Ext range t <= " + std::to_string(t_max) + " exceeds the truncation at " +
                             std::to_string(*M->top()));
  KoszulComplex K(M);
  BigradedDims out;
  out.s_max = s_max;
  out.t_max = t_max;
  out.t_min = M->min_degree() ? *M->min_degree() : 0;
  for (int s = 0; s <= s_max; ++s) {
    out.certified_t_max.push_back(std::min(t_max, K.certified_t_max(s)));
    auto [lo, hi] = K.t_window(s);
    for (int64_t t = lo; t <= std::min(hi, t_max); ++t) {
      if (K.dim(s, t) == 0) continue;
      size_t n = K.cohomology(s, t).dim();
      if (n) out.dims[{s, t}] = n;
    }
  }
  return out;
}

inline BigradedDims ext_koszul(const QModule& M, int s_max, int64_t t_max) {
  return ext_koszul(std::make_shared<const QModule>(M), s_max, t_max);
}

// Minimal free resolution over the exterior algebra on M's operators.
struct FreeResolution {
  std::shared_ptr<const QModule> target;
  std::vector<std::shared_ptr<const QModule>> free;       // F_0, F_1, ...
  std::vector<std::vector<Element>> generator_images;     // images of generators of F_s in F_{s-1} (or M)
  std::vector<std::vector<int64_t>> generator_degrees;

  int length() const { return static_cast<int>(free.size()) - 1; }
  std::optional<int64_t> max_generator_degree(int s) const {
    if (s < 0 || s > length() || generator_degrees[s].empty()) return std::nullopt;
    return *std::max_element(generator_degrees[s].begin(), generator_degrees[s].end());
  }
};

namespace detail {

// Matrix in degree d of the E-linear map out of a free module given by generator images.
inline FpMatrix free_map_matrix(const QModule& F, const std::vector<int64_t>& gen_degrees,
                                const std::vector<Element>& images, const QModule& T, int64_t d) {
  FpMatrix m(F.p(), T.dim(d), F.dim(d));
  // free_module orders the basis of each degree by (generator, subset).
  std::vector<std::pair<size_t, unsigned>> entries;
  for (size_t g = 0; g < gen_degrees.size(); ++g)
    for (unsigned I = 0; I < 8; ++I)
      if ((I & F.mask()) == I && gen_degrees[g] - subset_drop(F, I) == d) entries.emplace_back(g, I);
  std::sort(entries.begin(), entries.end());
  for (size_t c = 0; c < entries.size(); ++c) {
    auto [g, I] = entries[c];
    FpVector w = monomial_action(T, I, gen_degrees[g]).apply(images[g].v);
    for (size_t r = 0; r < w.size(); ++r) m.set(r, c, w[r]);
  }
  return m;
}

}  // namespace detail

inline FreeResolution resolve_exterior(std::shared_ptr<const QModule> M, int length) {
  if (M->top()) throw CertificationError("minimal resolutions need a finite (exact) module");
  FreeResolution res;
  res.target = M;
  const QModule* prev = M.get();
  for (int s = 0; s <= length; ++s) {
    // Submodule to cover: M itself for s = 0, else the kernel of F_{s-1} -> previous target.
    DegreeSpans spans;
    if (s == 0) {
      for (int64_t d : prev->degrees()) {
        Subspace all(prev->p(), prev->dim(d));
        for (size_t k = 0; k < prev->dim(d); ++k) all.insert(basis_element(*prev, d, k).v);
        spans.emplace(d, std::move(all));
      }
    } else {
      const QModule& F = *res.free[s - 1];
      const QModule& T = s == 1 ? *M : *res.free[s - 2];
      for (int64_t d : F.degrees()) {
        Subspace k = kernel_basis(detail::free_map_matrix(F, res.generator_degrees[s - 1], res.generator_images[s - 1], T, d));
        if (k.dim()) spans.emplace(d, std::move(k));
      }
      prev = &F;
    }
    std::vector<Element> gens = minimal_generators(*prev, spans);
    std::vector<int64_t> degs;
    for (auto& g : gens) degs.push_back(g.degree);
    res.free.push_back(std::make_shared<const QModule>(free_module(M->ctx(), M->mask(), degs)));
    res.generator_degrees.push_back(std::move(degs));
    res.generator_images.push_back(std::move(gens));
  }
  return res;
}

// Hom_E(F_s, N) in degree t and its coboundary to Hom_E(F_{s+1}, N).
class HomComplex {
 public:
  HomComplex(const FreeResolution& R, std::shared_ptr<const QModule> N) : R_(R), N_(std::move(N)) {}

  size_t dim(int s, int64_t t) const {
    size_t n = 0;
    for (int64_t d : R_.generator_degrees[s]) n += N_->dim(d + t);
    return n;
  }

  FpMatrix coboundary(int s, int64_t t) const {
    const auto& gs = R_.generator_degrees[s];
    const auto& gs1 = R_.generator_degrees[s + 1];
    std::vector<size_t> off(gs.size() + 1, 0), off1(gs1.size() + 1, 0);
    for (size_t g = 0; g < gs.size(); ++g) off[g + 1] = off[g] + N_->dim(gs[g] + t);
    for (size_t g = 0; g < gs1.size(); ++g) off1[g + 1] = off1[g] + N_->dim(gs1[g] + t);
    const uint32_t p = N_->p();
    FpMatrix m(p, off1.back(), off.back());
    if (m.rows() == 0 || m.cols() == 0) return m;
    const auto& terms = boundary_terms(s);
    for (size_t h = 0; h < gs1.size(); ++h) {
      if (off1[h + 1] == off1[h]) continue;
      for (const auto& [g, I, coeff] : terms[h]) {
        if (off[g + 1] == off[g]) continue;
        // (δφ)(h) += coeff Q^I φ(g)
        const FpMatrix& qi = action(I, gs[g] + t);
        for (size_t r = 0; r < qi.rows(); ++r)
          for (size_t k = 0; k < qi.cols(); ++k)
            if (uint32_t x = qi.at(r, k)) m.add_to(off1[h] + r, off[g] + k, fp::mul(coeff, x, p));
      }
    }
    return m;
  }

  // Ext^{s,t} is determined when every N-degree read by Hom(F_{s-1..s+1}, N) lies within N's top.
  bool certified(int s, int64_t t) const {
    if (!N_->top()) return true;
    for (int u = std::max(0, s - 1); u <= s + 1 && u <= R_.length(); ++u) {
      auto m = R_.max_generator_degree(u);
      if (m && *m + t > *N_->top()) return false;
    }
    return true;
  }

  Subquotient cohomology(int s, int64_t t) const {
    Subspace Z = kernel_basis(coboundary(s, t));
    Subspace B = s > 0 ? image_basis(coboundary(s - 1, t)) : Subspace(N_->p(), dim(s, t));
    return Subquotient(Z, B);
  }

  std::pair<int64_t, int64_t> t_window(int s) const {
    int64_t lo = INT64_MAX / 4, hi = INT64_MIN / 4;
    if (!N_->min_degree()) return {1, 0};
    for (int64_t d : R_.generator_degrees[s]) {
      lo = std::min(lo, *N_->min_degree() - d);
      hi = std::max(hi, *N_->max_degree() - d);
    }
    return {lo, hi};
  }

 private:
  using Term = std::tuple<size_t, unsigned, uint32_t>;  // (generator of F_s, subset I, coefficient)

  // Boundary of each generator of F_{s+1} expanded in the basis Q^I g of F_s.
  const std::vector<std::vector<Term>>& boundary_terms(int s) const {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = terms_.find(s);
    if (it != terms_.end()) return it->second;
    const auto& gs = R_.generator_degrees[s];
    const QModule& F = *R_.free[s];
    std::vector<std::vector<Term>> out;
    for (const auto& img : R_.generator_images[s + 1]) {
      std::vector<std::pair<size_t, unsigned>> entries;
      for (size_t g = 0; g < gs.size(); ++g)
        for (unsigned I = 0; I < 8; ++I)
          if ((I & F.mask()) == I && gs[g] - subset_drop(F, I) == img.degree) entries.emplace_back(g, I);
      std::sort(entries.begin(), entries.end());
      std::vector<Term> ts;
      for (size_t c = 0; c < entries.size(); ++c)
        if (img.v[c]) ts.emplace_back(entries[c].first, entries[c].second, img.v[c]);
      out.push_back(std::move(ts));
    }
    return terms_.emplace(s, std::move(out)).first->second;
  }

  const FpMatrix& action(unsigned I, int64_t d) const {
    std::lock_guard<std::mutex> lock(mu_);
    auto key = std::pair{I, d};
    auto it = actions_.find(key);
    if (it != actions_.end()) return it->second;
    return actions_.emplace(key, monomial_action(*N_, I, d)).first->second;
  }

  const FreeResolution& R_;
  std::shared_ptr<const QModule> N_;
  mutable std::mutex mu_;
  mutable std::map<int, std::vector<std::vector<Term>>> terms_;
  mutable std::map<std::pair<unsigned, int64_t>, FpMatrix> actions_;
};

// Ext^{s,t}(M, N) for s <= s_max, t in [t_min, t_max]; M finite, N finite or truncated.
inline BigradedDims ext_general(const FreeResolution& R, std::shared_ptr<const QModule> N, int s_max, int64_t t_min,
                                int64_t t_max) {
  if (R.length() < s_max + 1) throw ConfigError("resolution too short for the requested s range");
  require_compatible(*R.target, *N);
  HomComplex H(R, N);
  BigradedDims out;
  out.s_max = s_max;
  out.t_min = t_min;
  out.t_max = t_max;
  for (int s = 0; s <= s_max; ++s) {
    int64_t cert = t_max;
    if (N->top())
      for (int64_t t = t_min; t <= t_max; ++t)
        if (!H.certified(s, t)) {
          cert = t - 1;
          break;
        }
    out.certified_t_max.push_back(cert);
    auto [lo, hi] = H.t_window(s);
    for (int64_t t = std::max(lo, t_min); t <= std::min({hi, t_max, cert}); ++t) {
      if (H.dim(s, t) == 0) continue;
      size_t n = H.cohomology(s, t).dim();
      if (n) out.dims[{s, t}] = n;
    }
  }
  return out;
}

inline BigradedDims ext_general(std::shared_ptr<const QModule> M, std::shared_ptr<const QModule> N, int s_max,
                                int64_t t_min, int64_t t_max) {
  FreeResolution R = resolve_exterior(M, s_max + 1);
  return ext_general(R, std::move(N), s_max, t_min, t_max);
}

struct ParityReport {
  std::vector<Bidegree> violations;  // (s,t) with t - s odd, s >= s_min, dim > 0
  BigradedDims chart;
  bool ok() const { return violations.empty(); }
};

inline ParityReport odd_classes(const BigradedDims& chart, int s_min) {
  ParityReport rep{{}, chart};
  for (auto& [k, v] : chart.dims)
    if (k.first >= s_min && ((k.second - k.first) % 2 + 2) % 2 == 1 && chart.certified(k.first, k.second))
      rep.violations.push_back(k);
  return rep;
}

// Ext over E(Q_j, Q_h) of M restricted to the pair: no odd-(t-s) classes with s >= s_min.
inline ParityReport even_concentration_check(const QModule& M, int j, int h, int s_min, int s_max, int64_t t_max) {
  auto R = std::make_shared<const QModule>(restrict_mask(M, mask_of({j, h})));
  return odd_classes(ext_koszul(R, s_max, t_max), s_min);
}

struct BocksteinE1 {
  int i;                                 // the Bockstein variable v_i
  BigradedDims pair_ext;                 // Ext over E(Q_j, Q_h)
  std::map<std::tuple<int, int64_t, int>, size_t> page;  // (s, t, r) -> dim of Ext^{s-r, t-r d_i} v_i^r
  BigradedDims full_ext;                 // Ext over E(2), for the dimension comparison
  bool parity_collapse = false;          // pair Ext even-concentrated: no differentials possible
  bool dims_match = false;               // Σ_r E_1 dims equal Ext_{E(2)} dims in range
  std::vector<Bidegree> mismatches;
};

// v_i-Bockstein E_1 page for Ext_{E(2)}(F_p, M) with E_1 = Ext_{E(Q_j,Q_h)}(F_p, M)[v_i].
inline BocksteinE1 bockstein_e1(const QModule& M, int i, int s_max, int64_t t_max) {
  if (M.mask() != kFullMask) throw MalformedInput("Bockstein pages need an E(2)-module");
  if (i < 0 || i > 2) throw MalformedInput("Bockstein variable must be v0, v1 or v2");
  QMask pair = static_cast<QMask>(kFullMask & ~(1u << i));
  auto P = std::make_shared<const QModule>(restrict_mask(M, pair));
  BocksteinE1 e;
  e.i = i;
  e.pair_ext = ext_koszul(P, s_max, t_max);
  e.full_ext = ext_koszul(std::make_shared<const QModule>(M), s_max, t_max);
  const int64_t di = M.ctx().q_drop(i);
  std::map<Bidegree, size_t> summed;
  for (auto& [k, v] : e.pair_ext.dims)
    for (int r = 0; k.first + r <= s_max && k.second + r * di <= t_max; ++r) {
      e.page[{k.first + r, k.second + r * di, r}] = v;
      summed[{k.first + r, k.second + r * di}] += v;
    }
  e.parity_collapse = odd_classes(e.pair_ext, 0).ok();
  // Compare where both charts are certified.
  std::set<Bidegree> keys;
  for (auto& [k, v] : summed) keys.insert(k);
  for (auto& [k, v] : e.full_ext.dims) keys.insert(k);
  for (auto& k : keys) {
    if (!e.full_ext.certified(k.first, k.second) || !e.pair_ext.certified(k.first, k.second)) continue;
    size_t a = summed.count(k) ? summed.at(k) : 0;
    if (a != e.full_ext.at(k.first, k.second)) e.mismatches.push_back(k);
  }
  e.dims_match = e.mismatches.empty();
  return e;
}

struct InjectivityReport {
  int i;
  std::vector<Bidegree> failures;  // source bidegrees where v_i has a kernel on Ext
  size_t checked_classes = 0;
  bool ok() const { return failures.empty(); }
};

// v_i · (-) : Ext^{s,t} -> Ext^{s+1, t+d_i} injective for s < s_max and targets with t + d_i <= t_max.
inline InjectivityReport v_injectivity(std::shared_ptr<const QModule> M, int i, int s_max, int64_t t_max) {
  if (!M->defines(i)) throw MalformedInput("v" + std::to_string(i) + " does not act on this Ext");
  if (M->top() && t_max > *M->top()) throw CertificationError("v-injectivity range exceeds the truncation");
  KoszulComplex K(M);
  InjectivityReport rep{i, {}, 0};
  const int64_t di = M->drop(i);
  for (int s = 0; s < s_max; ++s) {
    auto [lo, hi] = K.t_window(s);
    for (int64_t t = lo; t <= std::min(hi, t_max - di); ++t) {
      if (K.dim(s, t) == 0) continue;
      const Subquotient& src = K.cohomology(s, t);
      if (src.dim() == 0) continue;
      const Subquotient& tgt = K.cohomology(s + 1, t + di);
      FpMatrix v = K.v_mult(i, s, t);
      Subspace img(M->p(), tgt.dim());
      for (auto& z : src.representatives()) img.insert(tgt.coordinates(v.apply(z)));
      rep.checked_classes += src.dim();
      if (img.dim() != src.dim()) rep.failures.push_back({s, t});
    }
  }
  return rep;
}

// The c with dim Ext^{s,t}(F_p, X) = dim Ext^{s-b, t-c}(F_p, F_p) for max(1, b) <= s <= s_max, if any.
// For 0 < s < b the left side carries negative Tate classes with no ordinary counterpart.
inline std::optional<int64_t> ext_translation(const QModule& X, int64_t b, int s_max) {
  auto Xp = std::make_shared<const QModule>(X);
  if (!X.max_degree()) return std::nullopt;
  const int64_t dmax = X.ctx().q_drop(mask_indices(X.mask()).back());
  int64_t t_hi = *X.max_degree() + s_max * dmax + 1;
  BigradedDims lhs = ext_koszul(Xp, s_max, t_hi);
  int ref_s = static_cast<int>(s_max - b);
  if (ref_s < 0) return std::nullopt;
  BigradedDims ref = ext_koszul(std::make_shared<const QModule>(trivial_module(X.ctx(), X.mask())), ref_s,
                                ref_s * dmax + 1);
  // Candidate c from the first nonzero lhs cell with s > 0.
  const int s_lo = static_cast<int>(std::max<int64_t>(1, b));
  std::optional<int64_t> c;
  for (auto& [k, v] : lhs.dims)
    if (k.first >= s_lo) {
      int rs = static_cast<int>(k.first - b);
      for (auto& [rk, rv] : ref.dims)
        if (rk.first == rs) {
          c = k.second - rk.second;
          break;
        }
      break;
    }
  if (!c) return std::nullopt;
  std::set<Bidegree> keys;
  for (auto& [k, v] : lhs.dims)
    if (k.first >= s_lo) keys.insert(k);
  for (auto& [k, v] : ref.dims) {
    int s = static_cast<int>(k.first + b);
    if (s >= s_lo && s <= s_max) keys.insert({s, k.second + *c});
  }
  for (auto& k : keys) {
    int rs = static_cast<int>(k.first - b);
    size_t r = rs >= 0 ? ref.at(rs, k.second - *c) : 0;
    if (lhs.at(k.first, k.second) != r) return std::nullopt;
  }
  return c;
}

}  // namespace bpsplit
