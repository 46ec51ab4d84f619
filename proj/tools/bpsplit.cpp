// bpsplit: command-line front end for the BP<2> splitting checks.
//
// Exit codes: 0 all checks pass, 1 a mathematical check failed, 2 configuration error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "bpsplit/bpsplit.hpp"

using namespace bpsplit;
using nlohmann::json;

namespace {

struct Options {
  RunConfig cfg;
  std::string format = "text";
  std::string output;
  std::optional<int64_t> k;
  std::optional<int64_t> m;
  std::optional<int64_t> t_max;
};

struct Output {
  std::string text, tsv;
  json doc;
  bool ok = true;
};

std::string render(const Output& out, const std::string& format) {
  if (format == "json") return out.doc.dump(2) + "\n";
  if (format == "tsv") return out.tsv;
  return out.text;
}

std::string default_name(const std::string& command, const std::string& format) {
  return command + (format == "json" ? ".json" : format == "tsv" ? ".tsv" : ".txt");
}

void emit(const Output& out, const Options& o, const std::string& command) {
  std::string body = render(out, o.format);
  std::filesystem::path path = o.output;
  const char* dir = std::getenv("BPSPLIT_OUTPUT_DIR");
  if (dir && *dir) {
    if (path.empty()) path = default_name(command, o.format);
    if (path.is_relative()) path = std::filesystem::path(dir) / path;
  }
  if (path.empty()) {
    std::cout << body;
    return;
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + path.string());
  f << body;
  std::cerr << "wrote " << path.string() << "\n";
}

json envelope(const std::string& command, const Options& o) {
  json j;
  j["schema"] = kReportSchema;
  j["command"] = command;
  j["versions"] = {{"bpsplit", kVersion}};
  j["config"] = {{"p", o.cfg.p}};
  return j;
}

std::string checks_text(const std::vector<Check>& cs) {
  std::ostringstream os;
  for (auto& c : cs) {
    os << (c.ok ? "PASS " : "FAIL ") << std::left << std::setw(22) << c.name << " " << c.range.dump() << "\n";
    size_t shown = 0;
    for (auto& f : c.failures) {
      if (++shown > 10) {
        os << "    ... " << c.failures.size() - 10 << " more\n";
        break;
      }
      os << "    " << f << "\n";
    }
  }
  return os.str();
}

std::string checks_tsv(const std::vector<Check>& cs) {
  std::ostringstream os;
  os << "check\tstatus\tfailures\n";
  for (auto& c : cs) os << c.name << '\t' << (c.ok ? "pass" : "fail") << '\t' << c.failures.size() << '\n';
  return os.str();
}

Output cmd_basis(const Options& o) {
  PrimeContext ctx(o.cfg.p);
  if (o.cfg.max_degree < 0) throw ConfigError("--max-degree must be >= 0");
  auto ms = enumerate_by_degree(ctx, AlgebraSpec(o.cfg.i), o.cfg.max_degree);
  Output out;
  out.doc = envelope("basis", o);
  out.doc["config"]["i"] = o.cfg.i;
  out.doc["config"]["max_degree"] = o.cfg.max_degree;
  json rows = json::array();
  std::ostringstream tx, ts;
  tx << std::left << std::setw(28) << "monomial" << std::setw(8) << "degree" << std::setw(8) << "weight"
     << "length\n";
  ts << "monomial\tdegree\tweight\tlength\n";
  for (auto& m : ms) {
    auto s = to_string(m);
    rows.push_back({{"monomial", s}, {"degree", degree(ctx, m)}, {"weight", weight(ctx, m)}, {"length", length(m)}});
    tx << std::setw(28) << s << std::setw(8) << degree(ctx, m) << std::setw(8) << weight(ctx, m) << length(m) << "\n";
    ts << s << '\t' << degree(ctx, m) << '\t' << weight(ctx, m) << '\t' << length(m) << '\n';
  }
  out.doc["rows"] = rows;
  out.doc["ok"] = true;
  out.text = tx.str();
  out.tsv = ts.str();
  return out;
}

// Whole map as one matrix: columns follow the source basis, rows the target basis, both by degree.
Output cmd_theta(const Options& o) {
  PrimeContext ctx(o.cfg.p);
  if (!o.k) throw ConfigError("theta needs --k");
  if (*o.k < 0) throw ConfigError("--k must be >= 0");
  if (o.cfg.i < 0 || o.cfg.i > 1) throw ConfigError("theta needs --i 0 or 1");
  auto r = theta(ctx, o.cfg.i, *o.k);
  const QModule& S = r.map.source();
  const QModule& T = r.map.target();
  std::vector<std::pair<int64_t, size_t>> cols, rows;
  std::map<int64_t, size_t> row_off;
  for (int64_t d : S.degrees())
    for (size_t c = 0; c < S.dim(d); ++c) cols.emplace_back(d, c);
  for (int64_t d : T.degrees()) {
    row_off[d] = rows.size();
    for (size_t c = 0; c < T.dim(d); ++c) rows.emplace_back(d, c);
  }
  std::vector<std::vector<uint32_t>> mat(rows.size(), std::vector<uint32_t>(cols.size(), 0));
  json images = json::array();
  for (size_t c = 0; c < cols.size(); ++c) {
    auto [d, idx] = cols[c];
    FpMatrix m = r.map.matrix(d);
    std::string img;
    for (size_t row = 0; row < m.rows(); ++row)
      if (m.at(row, idx)) {
        mat[row_off[d] + row][c] = m.at(row, idx);
        img = T.labels(d)[row].text;
      }
    images.push_back({{"source", S.labels(d)[idx].text}, {"degree", d}, {"image", img}});
  }
  Check chk{"theta"};
  chk.range = {{"k", *o.k}, {"i", o.cfg.i}};
  chk.absorb(r.checks);
  Output out;
  out.ok = chk.ok;
  out.doc = envelope("theta", o);
  out.doc["config"]["i"] = o.cfg.i;
  out.doc["config"]["k"] = *o.k;
  out.doc["images"] = images;
  out.doc["matrix"] = mat;
  out.doc["checks"] = json::array({chk.to_json()});
  out.doc["ok"] = chk.ok;
  std::ostringstream tx, ts;
  tx << "theta_" << *o.k << ": " << rows.size() << "x" << cols.size() << "\n";
  for (auto& im : images)
    tx << "  " << std::left << std::setw(24) << im["source"].get<std::string>() << " -> "
       << im["image"].get<std::string>() << "  (degree " << im["degree"] << ")\n";
  for (auto& row : mat) {
    tx << " ";
    for (auto v : row) tx << " " << v;
    tx << "\n";
  }
  tx << checks_text({chk});
  ts << "source\tdegree\timage\n";
  for (auto& im : images)
    ts << im["source"].get<std::string>() << '\t' << im["degree"] << '\t' << im["image"].get<std::string>() << '\n';
  out.text = tx.str();
  out.tsv = ts.str();
  return out;
}

Output from_checks(const std::string& command, const Options& o, std::vector<Check> cs, json data) {
  Report rep{command, o.cfg, std::move(cs), std::move(data)};
  Output out;
  out.ok = rep.ok();
  out.doc = rep.to_json();
  out.text = checks_text(rep.checks);
  if (rep.data.contains("conclusion")) out.text += rep.data["conclusion"].get<std::string>() + "\n";
  out.tsv = checks_tsv(rep.checks);
  return out;
}

Output cmd_margolis(const Options& o) {
  PrimeContext ctx(o.cfg.p);
  if (o.cfg.max_degree < 0) throw ConfigError("--max-degree must be >= 0");
  std::vector<Check> cs;
  json data = json::object();
  std::ostringstream ts;
  ts << "q\tt\tcomputed\tclosed_form\n";
  for (int i = 0; i <= 2; ++i) {
    auto r = margolis_bp2(ctx, i, o.cfg.max_degree);
    Check c{"Q" + std::to_string(i)};
    c.range = checks::degree_range(0, o.cfg.max_degree);
    c.absorb(r.checks);
    json rows = json::array();
    for (auto& d : r.per_degree) {
      if (d.lhs == 0 && d.rhs == 0) continue;
      rows.push_back({{"t", d.t}, {"computed", d.lhs}, {"closed_form", d.rhs}});
      ts << i << '\t' << d.t << '\t' << d.lhs << '\t' << d.rhs << '\n';
    }
    data["Q" + std::to_string(i)] = rows;
    cs.push_back(std::move(c));
  }
  Output out = from_checks("margolis", o, std::move(cs), std::move(data));
  out.tsv = ts.str();
  return out;
}

Output cmd_classify(const Options& o) {
  PrimeContext ctx(o.cfg.p);
  if (o.cfg.n_max < 0) throw ConfigError("--n-max must be >= 0");
  Check c{"w_margolis"};
  c.range = {{"n_max", o.cfg.n_max}};
  auto rows = checks::classify_w(ctx, o.cfg.n_max, c);
  json data = {{"classes", checks::w_rows_json(rows)}};
  Output out = from_checks("classify", o, {c}, data);
  std::ostringstream tx, ts;
  ts << "family\tn\ta\tb\tx_degree\ty_degree\n";
  tx << std::left << std::setw(8) << "family" << std::setw(4) << "n" << std::setw(8) << "a" << std::setw(6) << "b"
     << std::setw(10) << "|x|" << "|y|\n";
  for (auto& r : rows) {
    if (!r.cls) continue;
    ts << to_string(r.family) << '\t' << r.n << '\t' << r.cls->a << '\t' << r.cls->b << '\t' << r.cls->x_degree << '\t'
       << r.cls->y_degree << '\n';
    tx << std::setw(8) << to_string(r.family) << std::setw(4) << r.n << std::setw(8) << r.cls->a << std::setw(6)
       << r.cls->b << std::setw(10) << r.cls->x_degree << r.cls->y_degree << "\n";
  }
  out.text = tx.str() + out.text;
  out.tsv = ts.str();
  return out;
}

// Ext_{E(2)}(F_p, C̄_k), or Ext_{E(2)}(C̄_k, Σ^{qm}C̄_m) when --m is given.
Output cmd_ext(const Options& o) {
  PrimeContext ctx(o.cfg.p);
  if (!o.k || *o.k < 0) throw ConfigError("ext needs --k >= 0");
  if (o.m && *o.m < 0) throw ConfigError("--m must be >= 0");
  if (o.cfg.s_max < 0 || o.cfg.s_max > 12) throw ConfigError("--s-max must be in [0, 12]");
  auto C = std::make_shared<const QModule>(weight_restricted_C(ctx, *o.k));
  BigradedDims chart;
  json cfg = {{"p", o.cfg.p}, {"k", *o.k}, {"s_max", o.cfg.s_max}};
  if (!o.m) {
    int64_t t_max = o.t_max ? *o.t_max : checks::block_t_max(*C, o.cfg.s_max);
    chart = ext_koszul(C, o.cfg.s_max, t_max);
    cfg["t_max"] = t_max;
  } else {
    auto R = resolve_exterior(C, o.cfg.s_max + 1);
    auto N = detail::cbar_block(ctx, *o.m);
    auto [lo, hi] = detail::hom_window(R, *N, o.cfg.s_max);
    if (lo > hi) lo = hi = 0;
    if (o.t_max) hi = std::min(hi, *o.t_max);
    chart = ext_general(R, N, o.cfg.s_max, lo, hi);
    cfg["m"] = *o.m;
  }
  Output out;
  out.doc = envelope("ext", o);
  out.doc["config"] = cfg;
  out.doc["chart"] = chart.to_json();
  out.doc["ok"] = true;
  out.tsv = chart.to_tsv();
  std::ostringstream tx;
  tx << std::left << std::setw(4) << "s" << std::setw(8) << "t" << std::setw(6) << "dim" << "tag\n";
  for (auto& [c, n] : chart.dims)
    tx << std::setw(4) << c.first << std::setw(8) << c.second << std::setw(6) << n << chart.tag(c.first, c.second)
       << "\n";
  tx << "total " << chart.total() << "\n";
  out.text = tx.str();
  return out;
}

Output cmd_obstructions(const Options& o) {
  PrimeContext ctx(o.cfg.p);
  if (!o.k || *o.k < 0) throw ConfigError("obstructions needs --k >= 0");
  if (o.cfg.s_max < 2 || o.cfg.s_max > 12) throw ConfigError("--s-max must be in [2, 12]");
  const int64_t m_max = o.cfg.target_max();
  ComparisonSource src(ctx, *o.k, o.cfg.s_max);
  auto rep = obstruction_report(src, m_max, o.cfg.jobs);
  Check c{"obstructions"};
  c.range = {{"k", *o.k}, {"m_max", m_max}, {"s_min", 2}, {"s_max", o.cfg.s_max}};
  if (!rep.all_matched()) c.fail(rep.verdict());
  Output out = from_checks("obstructions", o, {c}, rep.to_json());
  std::ostringstream tx, ts;
  ts << "m\ts\tt\tdim\tin_cbar_summand\tmatched\n";
  for (auto& cl : rep.classes)
    ts << cl.m << '\t' << cl.s << '\t' << cl.t << '\t' << cl.dim << '\t' << cl.in_cbar_summand << '\t' << cl.matched
       << '\n';
  tx << "potential obstructions: " << rep.total() << " in " << rep.classes.size() << " cells\n"
     << out.text << rep.verdict() << "\n";
  out.text = tx.str();
  out.tsv = ts.str();
  return out;
}

Output cmd_verify(const Options& o) {
  Report rep = verify_splitting(o.cfg);
  return from_checks("verify-splitting", o, rep.checks, rep.data);
}

CLI::App* common(CLI::App* sub, Options& o) {
  sub->add_option("--p", o.cfg.p, "odd prime")->capture_default_str();
  sub->add_option("--format", o.format, "output format")->check(CLI::IsMember({"text", "json", "tsv"}))->capture_default_str();
  sub->add_option("--output", o.output, "output file (relative paths resolve under BPSPLIT_OUTPUT_DIR)");
  sub->add_option("--jobs", o.cfg.jobs, "worker threads")->capture_default_str();
  return sub;
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"Algebraic verification of the BP<2> splitting and its E_2-level obstructions"};
  app.set_version_flag("--version", kVersion);
  app.add_option("--p", o.cfg.p, "odd prime")->capture_default_str();

  auto* basis = common(app.add_subcommand("basis", "list the monomial basis of A//E(i)_*"), o);
  basis->add_option("--i", o.cfg.i, "height i of A//E(i)_*")->capture_default_str();
  basis->add_option("--max-degree", o.cfg.max_degree, "largest internal degree")->capture_default_str();

  auto* th = common(app.add_subcommand("theta", "theta_k: Sigma^{qk} B_i(k) -> M_{i+1}(pk) with checks"), o);
  th->add_option("--k", o.k, "Brown-Gitler weight bound")->required();
  th->add_option("--i", o.cfg.i, "height i of B_i(k)")->capture_default_str();

  auto* vs = common(app.add_subcommand("verify-splitting", "run the full verification pipeline"), o);
  vs->add_option("--max-degree", o.cfg.max_degree, "internal degree bound")->capture_default_str();
  vs->add_option("--k-max", o.cfg.k_max, "largest Brown-Gitler block")->capture_default_str();
  vs->add_option("--m-max", o.cfg.m_max, "largest target block for obstructions (default: all below max-degree)");
  vs->add_option("--propiso-max", o.cfg.propiso_max, "k, m bound for the E_2 comparison")->capture_default_str();
  vs->add_option("--n-max", o.cfg.n_max, "W-family index bound")->capture_default_str();
  vs->add_option("--s-max", o.cfg.s_max, "largest Ext filtration")->capture_default_str();
  vs->add_flag("--inject-fault", o.cfg.inject_fault, "perturb one action entry of H_*BP<2>")->group("");

  auto* mg = common(app.add_subcommand("margolis", "Margolis homology of H_*BP<2> against the closed forms"), o);
  mg->add_option("--max-degree", o.cfg.max_degree, "internal degree bound")->capture_default_str();

  auto* cl = common(app.add_subcommand("classify", "classify the W-blocks as invertible modules"), o);
  cl->add_option("--n-max", o.cfg.n_max, "W-family index bound")->capture_default_str();

  auto* ex = common(app.add_subcommand("ext", "Ext chart of C̄_k over E(2)"), o);
  ex->add_option("--k", o.k, "block weight")->required();
  ex->add_option("--m", o.m, "second block: chart Ext(C̄_k, Sigma^{qm} C̄_m)");
  ex->add_option("--s-max", o.cfg.s_max, "largest filtration")->capture_default_str();
  ex->add_option("--t-max", o.t_max, "largest internal degree");

  auto* ob = common(app.add_subcommand("obstructions", "potential obstructions to lifting theta_k"), o);
  ob->add_option("--k", o.k, "source block weight")->required();
  ob->add_option("--m-max", o.cfg.m_max, "largest target block")->capture_default_str();
  ob->add_option("--s-max", o.cfg.s_max, "largest filtration")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    PrimeContext ctx(o.cfg.p);
    if (o.cfg.jobs < 1) throw ConfigError("--jobs must be >= 1");
    auto subs = app.get_subcommands();
    if (subs.empty()) {
      std::cerr << app.help();
      return 2;
    }
    if (o.cfg.p < 5)
      std::cerr << "note: the splitting theorem assumes p >= 5; p = " << o.cfg.p << " runs the same algebraic checks\n";
    const std::string name = subs.front()->get_name();
    Output out;
    if (name == "basis") out = cmd_basis(o);
    else if (name == "theta") out = cmd_theta(o);
    else if (name == "verify-splitting") out = cmd_verify(o);
    else if (name == "margolis") out = cmd_margolis(o);
    else if (name == "classify") out = cmd_classify(o);
    else if (name == "ext") out = cmd_ext(o);
    else out = cmd_obstructions(o);
    emit(out, o, name);
    return out.ok ? 0 : 1;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const MalformedInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const CertificationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "check failed: " << e.what() << "\n";
    return 1;
  }
}
