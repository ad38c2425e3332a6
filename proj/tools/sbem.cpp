#include "sbem/studies.hpp"

#include <cstdio>
#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

using namespace sbem;

namespace {

struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct Options {
  std::string geometry = "six-patch-sphere";
  std::string levels = "1..3";
  std::string scheme = "dgr";
  std::string dgw_mode = "table";
  std::string n0 = "3";
  double eta = 1, omega = 1, vbar = 1, radius = 1, a = 1, ecc = 0.5;
  std::string solver = "lu";
  int threads = 1;
  std::string out;

  // solve
  std::string problem = "rotating";
  int max_iter = 0;
  std::string free_term = "solid-angle";
  std::string traction_out, export_prefix;
  bool timing = false;
  int ref_level = 0, ref_n0 = 8;

  // identity-study
  std::string per_point;

  // quad-study
  int max_n = 1024;

  // dump-rule
  std::string kind = "classical", loc = "center";
  int n = 3, p = 2, q = 2, set = 1;
};

std::pair<int, int> parse_levels(const std::string& s) {
  const auto dots = s.find("..");
  try {
    if (dots == std::string::npos) {
      const int l = std::stoi(s);
      return {l, l};
    }
    const int a = std::stoi(s.substr(0, dots)), b = std::stoi(s.substr(dots + 2));
    if (a < 1 || b < a) throw UsageError("bad level range " + s);
    return {a, b};
  } catch (const std::logic_error&) {
    throw UsageError("bad level range '" + s + "', expected a..b");
  }
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string tok; std::getline(ss, tok, ',');)
    if (!tok.empty()) out.push_back(tok);
  return out;
}

std::vector<int> parse_ints(const std::string& s) {
  std::vector<int> out;
  for (const auto& t : split(s)) {
    try {
      out.push_back(std::stoi(t));
    } catch (const std::logic_error&) {
      throw UsageError("bad integer list '" + s + "'");
    }
  }
  if (out.empty()) throw UsageError("empty list");
  return out;
}

std::vector<Scheme> parse_schemes(const std::string& s) {
  std::vector<Scheme> out;
  for (const auto& t : split(s)) {
    if (t == "all") return {Scheme::G, Scheme::DG, Scheme::DGr, Scheme::DGw};
    out.push_back(parse_scheme(t));
  }
  return out;
}

DgwMode parse_mode(const std::string& s) {
  if (s == "table") return DgwMode::Table;
  if (s == "fit") return DgwMode::Fit;
  throw UsageError("unknown dgw mode '" + s + "'");
}

Solver parse_solver(const std::string& s) {
  if (s == "lu") return Solver::LU;
  if (s == "gmres") return Solver::GMRES;
  throw UsageError("unknown solver '" + s + "'");
}

std::string comment_line(const std::string& cmd, const Options& o) {
  std::ostringstream os;
  os << "sbem " << cmd << " geometry=" << o.geometry << " levels=" << o.levels << " scheme=" << o.scheme
     << " dgw_mode=" << o.dgw_mode << " n0=" << o.n0 << " eta=" << o.eta << " omega=" << o.omega << " vbar=" << o.vbar
     << " radius=" << o.radius << " a=" << o.a << " ecc=" << o.ecc << " solver=" << o.solver;
  if (cmd == "solve")
    os << " problem=" << o.problem << " free_term=" << o.free_term << " ref_level=" << o.ref_level << " ref_n0=" << o.ref_n0;
  if (cmd == "quad-study") os << " max_n=" << o.max_n;
  return os.str();
}

class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty() && path != "-") {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw UsageError("cannot write " + path);
    }
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

GeometryParams geometry_params(const Options& o) { return {o.radius, o.a, o.ecc}; }

void add_shared(CLI::App* c, Options& o) {
  c->add_option("--geometry", o.geometry, "sheet | single-patch-sphere | six-patch-sphere | ellipsoid");
  c->add_option("--levels", o.levels, "refinement levels, a..b or a single level");
  c->add_option("--scheme", o.scheme, "g | dg | dgr | dgw, comma separated, or all");
  c->add_option("--dgw-mode", o.dgw_mode, "table | fit");
  c->add_option("--n0", o.n0, "quadrature densities, comma separated");
  c->add_option("--eta", o.eta, "viscosity")->check(CLI::PositiveNumber);
  c->add_option("--omega", o.omega, "angular velocity about e3");
  c->add_option("--vbar", o.vbar, "translation speed along e3");
  c->add_option("--radius", o.radius, "sphere radius")->check(CLI::PositiveNumber);
  c->add_option("--a", o.a, "ellipsoid semi-axis along e3")->check(CLI::PositiveNumber);
  c->add_option("--ecc", o.ecc, "ellipsoid eccentricity in [0,1)");
  c->add_option("--solver", o.solver, "lu | gmres");
  c->add_option("--threads", o.threads, "worker threads")->check(CLI::PositiveNumber);
  c->add_option("--out", o.out, "output path, default stdout");
}

int run_quad(const Options& o) {
  QuadStudyResult r = quad_study(o.max_n);
  r.table.comment = comment_line("quad-study", o) + "; " + r.table.comment;
  Output out(o.out);
  r.table.write(out.stream());
  std::cerr << "classical slope " << r.slope_classical << ", modified slope " << r.slope_modified << ", duffy err (>200 pts) corner/edge/center "
            << r.duffy_err_above_200[0] << "/" << r.duffy_err_above_200[1] << "/" << r.duffy_err_above_200[2] << ", I_sing err " << r.i_sing_err << ", I_near err " << r.i_near_err << "\n";
  return 0;
}

int run_identity(const Options& o) {
  const Geometry g = parse_geometry(o.geometry);
  if (g == Geometry::Sheet) throw UsageError("identity-study requires a closed geometry");
  const auto [l0, l1] = parse_levels(o.levels);
  const auto schemes = parse_schemes(o.scheme);
  const auto n0s = parse_ints(o.n0);
  const DgwMode mode = parse_mode(o.dgw_mode);
  Table t = identity_study_table(g, l0, l1, schemes, n0s, geometry_params(o), mode, o.threads);
  t.comment = comment_line("identity-study", o);
  Output out(o.out);
  t.write(out.stream());
  if (!o.per_point.empty()) {
    Table d;
    d.comment = comment_line("identity-study", o) + " per-point";
    d.columns = {"level", "scheme", "n0", "index", "type", "x", "y", "z", "e_sl", "e_dl"};
    for (int l = l0; l <= l1; ++l) {
      const SurfaceMesh m = build_geometry(g, l, geometry_params(o));
      for (Scheme s : schemes)
        for (int n0 : n0s) {
          const IdentitySummary r = identity_study(m, {s, n0, mode}, o.threads);
          for (int A = 0; A < m.n_no; ++A) {
            const auto& c = m.colpts[A];
            d.add({fmt(l), to_string(s), fmt(n0), fmt(A), to_string(c.type), fmt(c.y.x()), fmt(c.y.y()), fmt(c.y.z()),
                   fmt(r.per_point[A].e_sl), fmt(r.per_point[A].e_dl)});
          }
        }
    }
    Output pp(o.per_point);
    d.write(pp.stream());
  }
  return 0;
}

int run_sheet(const Options& o) {
  if (parse_geometry(o.geometry) != Geometry::Sheet) throw UsageError("hybrid-sheet requires --geometry sheet");
  const auto [l0, l1] = parse_levels(o.levels);
  const auto n0s = parse_ints(o.n0);
  if (n0s.size() != 1) throw UsageError("hybrid-sheet takes a single n0");
  const auto rows = hybrid_sheet(l0, l1, parse_schemes(o.scheme), n0s[0], parse_mode(o.dgw_mode), o.threads);
  Table t = hybrid_sheet_table(rows, n0s[0]);
  t.comment = comment_line("hybrid-sheet", o);
  Output out(o.out);
  t.write(out.stream());
  return 0;
}

int run_solve(const Options& o) {
  SolveParams sp;
  sp.problem = parse_problem(o.problem);
  sp.geometry = parse_geometry(o.geometry);
  if (sp.geometry == Geometry::Sheet) throw UsageError("solve requires a closed geometry");
  if (sp.problem == Problem::EllipsoidRise && sp.geometry != Geometry::Ellipsoid)
    throw UsageError("ellipsoid-rise requires --geometry ellipsoid");
  if (!(o.ecc >= 0 && o.ecc < 1)) throw UsageError("--ecc must lie in [0,1)");
  sp.gp = geometry_params(o);
  sp.eta = o.eta;
  sp.max_iterations = o.max_iter;
  sp.omega = o.omega;
  sp.vbar = o.vbar;
  sp.solver = parse_solver(o.solver);
  sp.free_term = parse_free_term(o.free_term);
  sp.threads = o.threads;
  sp.ref_level = o.ref_level;
  sp.ref_n0 = o.ref_n0;
  const auto [l0, l1] = parse_levels(o.levels);
  const auto schemes = parse_schemes(o.scheme);
  const auto n0s = parse_ints(o.n0);
  const DgwMode mode = parse_mode(o.dgw_mode);

  const SolveOutput res = solve_study(sp, l0, l1, schemes, n0s, mode);
  Table t = solve_table(sp, res.rows, o.timing);
  t.comment = comment_line("solve", o);
  Output out(o.out);
  t.write(out.stream());
  for (const auto& r : res.rows)
    std::cerr << "level " << r.level << " " << to_string(r.scheme) << " n0=" << r.n0 << ": " << r.seconds << " s\n";

  const SurfaceMesh& m = res.last_mesh;
  if (!o.traction_out.empty()) {
    Table d;
    d.comment = comment_line("solve", o) + " traction at collocation points of the last run";
    d.columns = {"index", "x", "y", "z", "tx", "ty", "tz", "p"};
    for (const auto& c : m.colpts) {
      const SingularSite& s = c.sites.front();
      const Vec3 t = field_at(m, res.last_t, s.elem, s.xi);
      const Vec3 nrm = m.frame(s.elem, s.xi).n;
      d.add({fmt(c.index), fmt(c.y.x()), fmt(c.y.y()), fmt(c.y.z()), fmt(t.x()), fmt(t.y()), fmt(t.z()), fmt(-t.dot(nrm))});
    }
    Output tp(o.traction_out);
    d.write(tp.stream());
  }
  if (!o.export_prefix.empty()) {
    const auto& last = res.rows.back();
    const BemSystem sys = assemble(m, {last.scheme, last.n0, mode}, sp.eta, {sp.threads, sp.free_term});
    export_matrix(o.export_prefix + "_N.bin", sys.N);
    export_matrix(o.export_prefix + "_G.bin", sys.G);
    export_matrix(o.export_prefix + "_T.bin", sys.T);
  }
  return 0;
}

Vec2 parse_loc(const std::string& s) {
  if (s == "corner") return {-1, -1};
  if (s == "edge") return {0, -1};
  if (s == "center") return {0, 0};
  const auto v = split(s);
  if (v.size() == 2) {
    try {
      return {std::stod(v[0]), std::stod(v[1])};
    } catch (const std::logic_error&) {
    }
  }
  throw UsageError("bad --loc '" + s + "', expected corner, edge, center or xi1,xi2");
}

int run_rule(const Options& o) {
  if (o.n < 1) throw UsageError("--n must be positive");
  QuadRule r;
  if (o.kind == "classical")
    r = classical_gl_2d(o.n);
  else if (o.kind == "modified")
    r = modified_gl(o.p, o.q, o.n);
  else if (o.kind == "duffy")
    r = duffy_rule(parse_loc(o.loc), o.n);
  else if (o.kind == "adjusted") {
    if (o.set < 1 || o.set > 7) throw UsageError("--set must lie in 1..7");
    r = adjusted_from_table(o.set, D4::Identity());
  } else
    throw UsageError("unknown rule kind '" + o.kind + "'");
  Table t;
  t.comment = "sbem dump-rule kind=" + o.kind + " n=" + std::to_string(o.n) + " loc=" + o.loc + " p=" + std::to_string(o.p) +
           " q=" + std::to_string(o.q) + " set=" + std::to_string(o.set) + " points=" + std::to_string(r.size());
  t.columns = {"xi1", "xi2", "w"};
  auto full = [](double x) {
    char b[32];
    std::snprintf(b, sizeof b, "%.17g", x);
    return std::string(b);
  };
  for (int i = 0; i < r.size(); ++i) t.add({full(r.xi(0, i)), full(r.xi(1, i)), full(r.w(i))});
  Output out(o.out);
  t.write(out.stream());
  return 0;
}

int run_mesh(const Options& o) {
  const auto [l0, l1] = parse_levels(o.levels);
  if (l0 != l1) throw UsageError("dump-mesh takes a single level");
  const SurfaceMesh m = build_geometry(parse_geometry(o.geometry), l0, geometry_params(o));
  using json = nlohmann::ordered_json;
  json j;
  j["geometry"] = o.geometry;
  j["level"] = l0;
  j["n_no"] = m.n_no;
  json patches = json::array();
  for (size_t k = 0; k < m.patches.size(); ++k) {
    const auto& P = m.patches[k];
    json cps = json::array();
    for (Eigen::Index i = 0; i < P.cps.cols(); ++i) cps.push_back({P.cps(0, i), P.cps(1, i), P.cps(2, i), P.cps(3, i)});
    patches.push_back({{"p", P.p()}, {"q", P.q()}, {"U", P.U.knots}, {"V", P.V.knots}, {"cps", cps}, {"nodes", m.node_of[k]}});
  }
  j["patches"] = patches;
  json els = json::array();
  for (const auto& e : m.elements)
    els.push_back({{"patch", e.patch}, {"span", {e.iu, e.iv}}, {"u", {e.u0, e.u1}}, {"v", {e.v0, e.v1}}, {"nodes", e.nodes},
                   {"degenerate", e.degenerate}});
  j["elements"] = els;
  json cols = json::array();
  for (const auto& c : m.colpts) {
    json sites = json::array();
    for (const auto& s : c.sites) sites.push_back({{"element", s.elem}, {"xi", {s.xi(0), s.xi(1)}}, {"loc", to_string(s.loc)}});
    cols.push_back({{"index", c.index}, {"x", {c.y(0), c.y(1), c.y(2)}}, {"patch", c.patch}, {"uv", {c.uv(0), c.uv(1)}},
                    {"type", to_string(c.type)}, {"sites", sites}});
  }
  j["collocation"] = cols;
  Output out(o.out);
  out.stream() << j.dump(1) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stokes flow boundary elements on isogeometric surfaces"};
  app.require_subcommand(1);
  Options o;

  auto* quad = app.add_subcommand("quad-study", "singular and near-singular quadrature convergence on flat elements");
  add_shared(quad, o);
  quad->add_option("--max-n", o.max_n, "largest univariate GL density in the sweeps");

  auto* ident = app.add_subcommand("identity-study", "mean residuals of the single- and double-layer identities");
  add_shared(ident, o);
  ident->add_option("--per-point", o.per_point, "write per-collocation residuals to this path");

  auto* sheet = app.add_subcommand("hybrid-sheet", "hybrid scheme errors for int 1/r on refined flat sheets");
  add_shared(sheet, o);

  auto* solve = app.add_subcommand("solve", "Dirichlet solves for rotating, translating and rising bodies");
  add_shared(solve, o);
  solve->add_option("--problem", o.problem, "rotating | translating | ellipsoid-rise");
  solve->add_option("--free-term", o.free_term, "solid-angle | smooth");
  solve->add_option("--traction-out", o.traction_out, "traction at the collocation points of the last run");
  solve->add_option("--export-matrices", o.export_prefix, "write <prefix>_{N,G,T}.bin for the last run");
  solve->add_option("--max-iter", o.max_iter, "GMRES iteration limit (default 20 n_dof)")->check(CLI::NonNegativeNumber);
  solve->add_flag("--timing", o.timing, "add a wall-time column");
  solve->add_option("--ref-level", o.ref_level, "ellipsoid reference level (default: finest + 1)");
  solve->add_option("--ref-n0", o.ref_n0, "ellipsoid reference DGr density");

  auto* rule = app.add_subcommand("dump-rule", "print a master-element quadrature rule as xi1,xi2,w");
  add_shared(rule, o);
  rule->add_option("--kind", o.kind, "classical | modified | duffy | adjusted");
  rule->add_option("--n", o.n, "univariate density");
  rule->add_option("--loc", o.loc, "duffy apex: corner | edge | center | xi1,xi2");
  rule->add_option("--p", o.p, "modified GL degree p");
  rule->add_option("--q", o.q, "modified GL degree q");
  rule->add_option("--set", o.set, "adjusted weight set 1..7");

  auto* mesh = app.add_subcommand("dump-mesh", "print patches, elements and collocation points as JSON");
  add_shared(mesh, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*quad) return run_quad(o);
    if (*ident) return run_identity(o);
    if (*sheet) return run_sheet(o);
    if (*solve) return run_solve(o);
    if (*rule) return run_rule(o);
    if (*mesh) return run_mesh(o);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const SolverError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  }
  return 2;
}
