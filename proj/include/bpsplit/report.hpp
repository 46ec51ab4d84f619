#pragma once

// Verification pipeline behind `bpsplit verify-splitting`: each stage returns a Check with its
// certified range, and the run is summarized in a versioned JSON report.

#include <algorithm>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bpsplit/browngitler.hpp"
#include "bpsplit/ext.hpp"
#include "bpsplit/margolis.hpp"
#include "bpsplit/obstruction.hpp"
#include "bpsplit/parallel.hpp"
#include "bpsplit/poly.hpp"

namespace bpsplit {

inline constexpr const char* kVersion = "1.0.0";
inline constexpr const char* kReportSchema = "bpsplit.report/1";

struct RunConfig {
  uint32_t p = 3;
  int i = 1;
  int64_t max_degree = 120;
  int64_t k_max = 27;
  int64_t m_max = -1;     // obstruction targets; -1 means every block below max_degree
  int64_t propiso_max = 9;
  int n_max = 5;          // W-family index bound
  int s_max = 5;
  int64_t t_max = 120;
  unsigned jobs = 1;
  bool inject_fault = false;

  void validate() const {
    PrimeContext ctx(p);
    if (i < 0 || i > 2) throw ConfigError("--i must be 0, 1 or 2");
    if (max_degree < 0) throw ConfigError("--max-degree must be >= 0");
    if (k_max < 0) throw ConfigError("--k-max must be >= 0");
    if (m_max < -1) throw ConfigError("--m-max must be >= 0");
    if (propiso_max < 0) throw ConfigError("--propiso-max must be >= 0");
    if (n_max < 0) throw ConfigError("--n-max must be >= 0");
    if (s_max < 0 || s_max > 12) throw ConfigError("--s-max must be in [0, 12]");
    if (jobs < 1) throw ConfigError("--jobs must be >= 1");
  }

  // Brown-Gitler blocks Σ^{qk}B_1(k) that start at or below max_degree.
  int64_t block_max() const { return std::min(k_max, max_degree / PrimeContext(p).q()); }
  int64_t target_max() const { return m_max < 0 ? max_degree / PrimeContext(p).q() : m_max; }

  nlohmann::json to_json() const {
    return {{"p", p},         {"max_degree", max_degree}, {"k_max", k_max},     {"m_max", target_max()},
            {"propiso_max", propiso_max}, {"n_max", n_max}, {"s_max", s_max}, {"jobs", jobs},
            {"inject_fault", inject_fault}};
  }
};

struct Check {
  explicit Check(std::string n = {}) : name(std::move(n)) {}

  std::string name;
  bool ok = true;
  nlohmann::json range = nlohmann::json::object();
  nlohmann::json detail = nlohmann::json::object();
  std::vector<std::string> failures;

  void fail(std::string s) {
    ok = false;
    failures.push_back(std::move(s));
  }
  void absorb(const CheckReport& r, const std::string& prefix = "") {
    for (auto& f : r.failures) fail(prefix + f);
  }
  nlohmann::json to_json() const {
    return {{"name", name}, {"ok", ok}, {"certified_range", range}, {"detail", detail}, {"failures", failures}};
  }
};

struct Report {
  std::string command;
  RunConfig config;
  std::vector<Check> checks;
  nlohmann::json data = nlohmann::json::object();

  bool ok() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.ok; });
  }
  nlohmann::json to_json() const {
    nlohmann::json j;
    j["schema"] = kReportSchema;
    j["command"] = command;
    j["config"] = config.to_json();
    j["versions"] = {{"bpsplit", kVersion},
                     {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                           std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                           std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
    nlohmann::json cs = nlohmann::json::array();
    for (auto& c : checks) cs.push_back(c.to_json());
    j["checks"] = cs;
    j["data"] = data;
    j["ok"] = ok();
    return j;
  }
};

// The fault used by --inject-fault: the first entry whose increment breaks Q_i^2 = 0 or
// anticommutation, else the first action entry at all (caught by the theta comparison).
inline std::optional<FaultSite> injection_site(const QModule& M) {
  if (auto f = first_detectable_fault(M)) return f;
  for (int64_t d : M.degrees())
    for (int i : mask_indices(M.mask()))
      if (M.dim(d) && M.dim(d - M.drop(i))) return FaultSite{i, d, 0, 0};
  return std::nullopt;
}

namespace checks {

inline nlohmann::json degree_range(int64_t lo, int64_t hi) { return {{"t_min", lo}, {"t_max", hi}}; }

inline Check structure(const QModule& H, int64_t D) {
  Check c{"structure"};
  c.range = degree_range(0, D);
  c.absorb(verify_structure(H));
  c.detail["dim"] = H.total_dim();
  return c;
}

inline Check theta_blocks(const RunConfig& cfg) {
  PrimeContext ctx(cfg.p);
  Check c{"theta"};
  c.range = {{"k_max", cfg.block_max()}};
  auto rs = parallel_map(static_cast<size_t>(cfg.block_max() + 1), cfg.jobs,
                         [&](size_t k) { return theta(ctx, 1, static_cast<int64_t>(k)).checks; });
  for (size_t k = 0; k < rs.size(); ++k) c.absorb(rs[k], "k=" + std::to_string(k) + ": ");
  c.detail["blocks"] = rs.size();
  return c;
}

inline Check assembly(const RunConfig& cfg, std::shared_ptr<const QModule> H) {
  PrimeContext ctx(cfg.p);
  Check c{"assembly"};
  c.range = degree_range(0, cfg.max_degree);
  auto r = assemble_bp_splitting(ctx, 2, cfg.max_degree, std::move(H));
  c.absorb(r.checks);
  nlohmann::json dims = nlohmann::json::array();
  for (auto& d : r.per_degree) dims.push_back({{"t", d.t}, {"bp2", d.lhs}, {"blocks", d.rhs}});
  c.detail["per_degree"] = dims;
  return c;
}

inline Check length_split(const RunConfig& cfg) {
  PrimeContext ctx(cfg.p);
  Check c{"length_splitting"};
  c.range = degree_range(0, cfg.max_degree);
  auto s = length_splitting(ctx, cfg.max_degree);
  c.absorb(verify_split(s));
  int64_t hi = cfg.max_degree - ctx.q_drop(2);
  if (hi >= 0 && !freeness_check(*s.free_part, 0, hi)) c.fail("free part has Margolis homology");
  c.detail["free_dim"] = s.free_part->total_dim();
  c.detail["reduced_dim"] = s.reduced_part->total_dim();
  return c;
}

inline Check si_ri(const RunConfig& cfg) {
  PrimeContext ctx(cfg.p);
  Check c{"si_ri_splitting"};
  c.range = degree_range(0, cfg.max_degree);
  for (auto ph : {Permutation3{0, 1, 2}, Permutation3{1, 0, 2}, Permutation3{2, 0, 1}}) {
    auto r = si_ri_splitting(ctx, ph, cfg.max_degree);
    std::string tag = "S" + std::to_string(ph.i);
    c.absorb(r.checks, tag + ": ");
    c.detail[tag] = {{"free_dim", r.split.free_part->total_dim()}, {"reduced_dim", r.split.reduced_part->total_dim()}};
  }
  return c;
}

struct WRow {
  WFamily family;
  int64_t n;
  std::optional<InvertibleClass> cls;
};

inline std::vector<WRow> classify_w(const PrimeContext& ctx, int n_max, Check& c) {
  std::vector<WRow> rows;
  for (auto w : {WFamily::W1, WFamily::We, WFamily::Wo})
    for (int64_t n = 1; n <= n_max; ++n) {
      QModule W = w_family(ctx, w, n);
      auto qs = mask_indices(W.mask());
      const std::string tag = to_string(w) + "(" + std::to_string(n) + ")";
      for (int q : qs) {
        auto hm = margolis_homology(W, q);
        auto e = find_monomial(W, w_margolis_generator(ctx, w, n, q));
        if (hm.total_dim() != 1 || !e || hm.dim(e->degree) != 1 || margolis_at(W, q, e->degree).is_boundary(e->v))
          c.fail(tag + ": Q" + std::to_string(q) + "-homology is not the closed-form class");
      }
      auto cls = classify_invertible(W, qs[0], qs[1]);
      WRow row{w, n, std::nullopt};
      if (auto* ic = std::get_if<InvertibleClass>(&cls)) {
        row.cls = *ic;
        if (ic->b >= 0) c.fail(tag + ": b = " + std::to_string(ic->b) + " is not negative");
        QModule model = construct_model(ctx, qs[0], qs[1], ic->a, ic->b);
        for (int q : qs) {
          auto hw = margolis_homology(W, q), hm = margolis_homology(model, q);
          if (hw.classes.size() != hm.classes.size() || hw.classes.begin()->first != hm.classes.begin()->first)
            c.fail(tag + ": model Margolis degrees differ for Q" + std::to_string(q));
        }
      } else {
        c.fail(tag + ": " + std::get<NotInvertible>(cls).reason);
      }
      rows.push_back(row);
    }
  return rows;
}

inline nlohmann::json w_rows_json(const std::vector<WRow>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (auto& r : rows) {
    nlohmann::json j{{"family", to_string(r.family)}, {"n", r.n}};
    if (r.cls) {
      j["a"] = r.cls->a;
      j["b"] = r.cls->b;
      j["x_degree"] = r.cls->x_degree;
      j["y_degree"] = r.cls->y_degree;
    }
    out.push_back(j);
  }
  return out;
}

inline Check w_margolis(const RunConfig& cfg) {
  Check c{"w_margolis"};
  c.range = {{"n_max", cfg.n_max}};
  c.detail["classes"] = w_rows_json(classify_w(PrimeContext(cfg.p), cfg.n_max, c));
  return c;
}

// Ext over E(2) and its pairs is computed blockwise against C̄ = ⊕ Σ^{qk} C̄_k; every block is
// finite, so t_max = top + s_max·d_2 covers the whole Koszul complex in filtration <= s_max.
inline int64_t block_t_max(const QModule& C, int s_max) {
  return (C.max_degree() ? *C.max_degree() : 0) + static_cast<int64_t>(s_max) * C.ctx().q_drop(2);
}

inline std::vector<std::shared_ptr<const QModule>> cbar_blocks(const RunConfig& cfg) {
  PrimeContext ctx(cfg.p);
  return parallel_map(static_cast<size_t>(cfg.block_max() + 1), cfg.jobs, [&](size_t k) {
    return std::make_shared<const QModule>(weight_restricted_C(ctx, static_cast<int64_t>(k)));
  });
}

inline Check even_concentration(const RunConfig& cfg, const std::vector<std::shared_ptr<const QModule>>& blocks) {
  Check c{"even_concentration"};
  c.range = {{"k_max", cfg.block_max()}, {"s_max", cfg.s_max}, {"t", "complete per block"}};
  auto rs = parallel_map(blocks.size(), cfg.jobs, [&](size_t k) {
    std::vector<std::string> bad;
    for (auto [j, h] : {std::pair{0, 1}, {0, 2}, {1, 2}}) {
      auto r = even_concentration_check(*blocks[k], j, h, 0, cfg.s_max, block_t_max(*blocks[k], cfg.s_max));
      for (auto& v : r.violations)
        bad.push_back("k=" + std::to_string(k) + " E(Q" + std::to_string(j) + ",Q" + std::to_string(h) +
                      ") odd class at (" + std::to_string(v.first) + "," + std::to_string(v.second) + ")");
    }
    return bad;
  });
  for (auto& r : rs)
    for (auto& f : r) c.fail(f);
  return c;
}

inline Check bockstein(const RunConfig& cfg, const std::vector<std::shared_ptr<const QModule>>& blocks) {
  Check c{"bockstein_collapse"};
  c.range = {{"k_max", cfg.block_max()}, {"s_max", cfg.s_max}};
  auto rs = parallel_map(blocks.size(), cfg.jobs, [&](size_t k) {
    std::vector<std::string> bad;
    for (int i = 0; i <= 2; ++i) {
      auto e = bockstein_e1(*blocks[k], i, cfg.s_max, block_t_max(*blocks[k], cfg.s_max));
      std::string tag = "k=" + std::to_string(k) + " v" + std::to_string(i) + ": ";
      if (!e.parity_collapse) bad.push_back(tag + "E_1 page not even-concentrated");
      if (!e.dims_match) bad.push_back(tag + "E_1 dims differ from Ext over E(2)");
    }
    return bad;
  });
  for (auto& r : rs)
    for (auto& f : r) c.fail(f);
  return c;
}

inline Check injectivity(const RunConfig& cfg, const std::vector<std::shared_ptr<const QModule>>& blocks) {
  Check c{"v_injectivity"};
  c.range = {{"k_max", cfg.block_max()}, {"s_max", cfg.s_max}};
  auto rs = parallel_map(blocks.size(), cfg.jobs, [&](size_t k) {
    std::vector<std::string> bad;
    size_t checked = 0;
    for (int i = 0; i <= 2; ++i) {
      auto r = v_injectivity(blocks[k], i, cfg.s_max, block_t_max(*blocks[k], cfg.s_max));
      checked += r.checked_classes;
      for (auto& f : r.failures)
        bad.push_back("k=" + std::to_string(k) + " v" + std::to_string(i) + " has a kernel at (" +
                      std::to_string(f.first) + "," + std::to_string(f.second) + ")");
    }
    return std::pair{bad, checked};
  });
  size_t checked = 0;
  for (auto& [bad, n] : rs) {
    for (auto& f : bad) c.fail(f);
    checked += n;
  }
  c.detail["checked_classes"] = checked;
  return c;
}

inline Check projective_dim(const RunConfig& cfg, const std::vector<std::shared_ptr<const QModule>>& blocks) {
  Check c{"projective_dimension"};
  const int poly_s = std::max(cfg.s_max, 4) + 4;
  c.range = {{"k_max", cfg.block_max()}, {"s_max", poly_s}, {"u_max", 3}};
  auto rs = parallel_map(blocks.size(), cfg.jobs, [&](size_t k) {
    return projective_dimension(resolve_poly(std::make_shared<const ExtFpModule>(blocks[k]), 3, poly_s));
  });
  nlohmann::json pds = nlohmann::json::array();
  for (size_t k = 0; k < rs.size(); ++k) {
    std::string tag = "k=" + std::to_string(k) + ": ";
    if (rs[k].projective_dimension > 2) c.fail(tag + "length " + std::to_string(rs[k].projective_dimension));
    if (!rs[k].socle_empty()) c.fail(tag + "nonempty socle");
    if (!rs[k].stabilized) c.fail(tag + "resolution not stabilized");
    pds.push_back(rs[k].projective_dimension);
  }
  c.detail["pd"] = pds;
  return c;
}

inline Check propiso(const RunConfig& cfg) {
  PrimeContext ctx(cfg.p);
  const int64_t top = std::min(cfg.propiso_max, cfg.block_max());
  Check c{"propiso"};
  c.range = {{"k_max", top}, {"m_max", top}, {"s_max", cfg.s_max}};
  auto rs = parallel_map(static_cast<size_t>(top + 1), cfg.jobs, [&](size_t k) {
    ComparisonSource src(ctx, static_cast<int64_t>(k), cfg.s_max);
    std::vector<PropisoReport> out;
    for (int64_t m = 0; m <= top; ++m) out.push_back(propiso_check(src, m));
    return out;
  });
  size_t odd = 0;
  for (auto& row : rs)
    for (auto& r : row) {
      for (auto& [cell, n] : r.odd_cells) odd += n;
      std::string tag = "k=" + std::to_string(r.k) + " m=" + std::to_string(r.m) + ": ";
      if (!r.certified) c.fail(tag + "P-resolution not certified");
      for (int64_t t : r.mismatched_t) c.fail(tag + "dims differ at t=" + std::to_string(t));
    }
  c.detail["odd_classes"] = odd;
  return c;
}

inline Check obstructions(const RunConfig& cfg, nlohmann::json* reports = nullptr) {
  PrimeContext ctx(cfg.p);
  Check c{"obstructions"};
  c.range = {{"k_max", cfg.block_max()}, {"m_max", cfg.target_max()}, {"s_min", 2}, {"s_max", cfg.s_max}};
  size_t total = 0;
  nlohmann::json all = nlohmann::json::array();
  for (int64_t k = 0; k <= cfg.block_max(); ++k) {
    ComparisonSource src(ctx, k, cfg.s_max);
    auto o = obstruction_report(src, cfg.target_max(), cfg.jobs);
    total += o.total();
    if (!o.all_matched()) c.fail(o.verdict());
    nlohmann::json j{{"k", k}, {"total", o.total()}, {"verdict", o.verdict()}};
    all.push_back(j);
    if (reports) reports->push_back(o.to_json());
  }
  c.detail["potential_obstructions"] = total;
  c.detail["per_k"] = all;
  return c;
}

}  // namespace checks

// Runs every stage; with inject_fault, one action entry of H_*BP<2> is perturbed first.
inline Report verify_splitting(const RunConfig& cfg) {
  cfg.validate();
  PrimeContext ctx(cfg.p);
  Report rep{"verify-splitting", cfg, {}, {}};
  auto H = std::make_shared<const QModule>(bp_homology(ctx, 2, cfg.max_degree));
  if (cfg.inject_fault) {
    auto f = injection_site(*H);
    if (!f) throw ConfigError("no Q-action entry to perturb below degree " + std::to_string(cfg.max_degree));
    const bool detectable = first_detectable_fault(*H).has_value();
    H = std::make_shared<const QModule>(H->with_fault(f->i, f->degree, f->row, f->col));
    rep.data["fault"] = {{"q", f->i}, {"degree", f->degree}, {"row", f->row}, {"col", f->col},
                         {"detectable_by_structure", detectable}};
  }
  rep.checks.push_back(checks::structure(*H, cfg.max_degree));
  rep.checks.push_back(checks::theta_blocks(cfg));
  rep.checks.push_back(checks::assembly(cfg, H));
  rep.checks.push_back(checks::length_split(cfg));
  rep.checks.push_back(checks::si_ri(cfg));
  rep.checks.push_back(checks::w_margolis(cfg));
  auto blocks = checks::cbar_blocks(cfg);
  rep.checks.push_back(checks::even_concentration(cfg, blocks));
  rep.checks.push_back(checks::bockstein(cfg, blocks));
  rep.checks.push_back(checks::injectivity(cfg, blocks));
  rep.checks.push_back(checks::projective_dim(cfg, blocks));
  rep.checks.push_back(checks::propiso(cfg));
  rep.checks.push_back(checks::obstructions(cfg));
  rep.data["conclusion"] = rep.ok() ? "splitting verified at the E_2-comparison level through degree " +
                                          std::to_string(cfg.max_degree)
                                    : "verification failed";
  return rep;
}

}  // namespace bpsplit
