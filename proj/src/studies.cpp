#include "sbem/studies.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <thread>

namespace sbem {

namespace {

constexpr double pi = std::numbers::pi;

double asinh_term(double a, double b) { return a > 0 && b > 0 ? a * std::asinh(b / a) + b * std::asinh(a / b) : 0.0; }

double sgn(double x) { return (x > 0) - (x < 0); }

}  // namespace

void Table::write(std::ostream& os) const {
  os << "# " << comment << "\n";
  for (size_t i = 0; i < columns.size(); ++i) os << (i ? "," : "") << columns[i];
  os << "\n";
  for (const auto& r : rows) {
    for (size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
    os << "\n";
  }
}

std::vector<double> Table::column(const std::string& name, const std::string& key, const std::string& value) const {
  const auto idx = [&](const std::string& c) {
    const auto it = std::find(columns.begin(), columns.end(), c);
    if (it == columns.end()) throw std::out_of_range("no column " + c);
    return static_cast<size_t>(it - columns.begin());
  };
  const size_t c = idx(name);
  const size_t k = key.empty() ? 0 : idx(key);
  std::vector<double> out;
  for (const auto& r : rows)
    if (key.empty() || r[k] == value) out.push_back(std::stod(r[c]));
  return out;
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10e", x);
  return buf;
}

std::string fmt(long long x) { return std::to_string(x); }

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const int n = static_cast<int>(x.size());
  if (n < 2 || y.size() != x.size()) throw std::invalid_argument("slope needs at least two points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    const double a = std::log(x[i]), b = std::log(y[i]);
    sx += a;
    sy += b;
    sxx += a * a;
    sxy += a * b;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

double rect_inv_r(double x0, double x1, double y0, double y1) {
  double s = 0;
  for (auto [x, sx] : {std::pair{x1, 1.0}, std::pair{x0, -1.0}})
    for (auto [y, sy] : {std::pair{y1, 1.0}, std::pair{y0, -1.0}})
      s += sx * sy * sgn(x) * sgn(y) * asinh_term(std::abs(x), std::abs(y));
  return s;
}

Geometry parse_geometry(const std::string& s) {
  if (s == "sheet") return Geometry::Sheet;
  if (s == "single-patch-sphere" || s == "single") return Geometry::SinglePatchSphere;
  if (s == "six-patch-sphere" || s == "six") return Geometry::SixPatchSphere;
  if (s == "ellipsoid") return Geometry::Ellipsoid;
  throw std::invalid_argument("unknown geometry '" + s + "'");
}

const char* to_string(Geometry g) {
  switch (g) {
    case Geometry::Sheet: return "sheet";
    case Geometry::SinglePatchSphere: return "single-patch-sphere";
    case Geometry::SixPatchSphere: return "six-patch-sphere";
    case Geometry::Ellipsoid: return "ellipsoid";
  }
  return "?";
}

SurfaceMesh build_geometry(Geometry g, int level, const GeometryParams& p) {
  switch (g) {
    case Geometry::Sheet: {
      const int n = 4 << (level - 1);
      return build_sheet(n, n, 4.0 / n);
    }
    case Geometry::SinglePatchSphere: return build_single_patch_sphere(level, p.radius);
    case Geometry::SixPatchSphere: return build_six_patch_sphere(level, p.radius);
    case Geometry::Ellipsoid: return build_ellipsoid(level, p.a, p.ecc);
  }
  throw std::invalid_argument("bad geometry");
}

// ---------------------------------------------------------------- quad-study

namespace {

double rule_inv_r(const QuadRule& r, const SurfaceMesh& m, int e, const Vec3& y) {
  return integrate(r, m, e, [&](const ElementPoint& f) { return 1 / (f.x - y).norm(); });
}

}  // namespace

QuadStudyResult quad_study(int max_n) {
  QuadStudyResult out;
  Table& t = out.table;
  t.comment = "quad-study: flat element [-1,1]^2, collocation at corner, edge midpoint and center; 3x3 sheet with L^e=1";
  t.columns = {"study", "rule", "n", "n_qp_e", "r_min", "e_rel"};

  const SurfaceMesh one = build_sheet(1, 1, 2.0);
  const std::array<Vec3, 3> ys = {Vec3(-1, -1, 0), Vec3(0, -1, 0), Vec3(0, 0, 0)};
  std::array<double, 3> exact;
  for (int k = 0; k < 3; ++k) exact[k] = rect_inv_r(-1 - ys[k].x(), 1 - ys[k].x(), -1 - ys[k].y(), 1 - ys[k].y());

  auto sweep = [&](const std::string& name, const auto& make, const std::vector<int>& ns, std::vector<double>* nq,
                   std::vector<double>* er) {
    for (int n : ns) {
      double e = 0, rmin = std::numeric_limits<double>::infinity();
      double size = 0;
      for (int k = 0; k < 3; ++k) {
        const QuadRule r = make(n, k);
        size += r.size() / 3.0;
        e += std::abs(rule_inv_r(r, one, 0, ys[k]) - exact[k]) / exact[k];
        rmin = std::min(rmin, min_distance(r, one, 0, ys[k]));
      }
      e /= 3;
      t.add({"singular", name, fmt(n), fmt(std::llround(size)), fmt(rmin), fmt(e)});
      if (nq) nq->push_back(size);
      if (er) er->push_back(e);
    }
  };

  std::vector<int> even;
  for (int n = 2; n <= max_n; n *= 2) even.push_back(n);
  std::vector<double> nq, er;
  sweep("classical", [](int n, int) { return classical_gl_2d(n); }, even, &nq, &er);
  out.slope_classical = loglog_slope(nq, er);
  nq.clear();
  er.clear();
  sweep("modified", [](int n, int) { return modified_gl(2, 2, n); }, even, &nq, &er);
  out.slope_modified = loglog_slope(nq, er);

  std::vector<int> dn;
  for (int n = 1; n <= 16; ++n) dn.push_back(n);
  const std::array<Vec2, 3> xis = {Vec2(-1, -1), Vec2(0, -1), Vec2(0, 0)};
  const std::array<const char*, 3> locs = {"corner", "edge", "center"};
  out.duffy_max_err_above_200 = 0;
  for (int k = 0; k < 3; ++k) {
    out.duffy_err_above_200[k] = 0;
    for (int n : dn) {
      const QuadRule r = duffy_rule(xis[k], n);
      const double e = std::abs(rule_inv_r(r, one, 0, ys[k]) - exact[k]) / exact[k];
      t.add({std::string("singular-") + locs[k], "duffy", fmt(n), fmt(r.size()), fmt(min_distance(r, one, 0, ys[k])), fmt(e)});
      if (r.size() > 200) out.duffy_err_above_200[k] = std::max(out.duffy_err_above_200[k], e);
    }
    out.duffy_max_err_above_200 = std::max(out.duffy_max_err_above_200, out.duffy_err_above_200[k]);
  }

  // 3x3 sheet, collocation at the center of the middle element
  const SurfaceMesh sheet = build_sheet(3, 3, 1.0);
  const Vec3 y0 = Vec3::Zero();
  int mid = -1;
  for (int e = 0; e < sheet.n_el(); ++e)
    if ((sheet.position(e, Vec2::Zero()) - y0).norm() < 1e-12) mid = e;
  if (mid < 0) throw std::logic_error("3x3 sheet has no center element");
  const double sing_exact = std::log(12 * std::sqrt(2.0) + 17);
  const double near_exact = 6 * std::log(std::sqrt(2.0) + 1) + std::log(2 * std::sqrt(2.0) + 3);
  auto near_sum = [&](const QuadRule& r) {
    double s = 0;
    for (int e = 0; e < sheet.n_el(); ++e)
      if (e != mid) s += rule_inv_r(r, sheet, e, y0);
    return s;
  };
  for (int n = 2; n <= 16; n += 2) {
    const QuadRule r = classical_gl_2d(n);
    t.add({"sheet-singular", "classical", fmt(n), fmt(r.size()), fmt(min_distance(r, sheet, mid, y0)),
           fmt(std::abs(rule_inv_r(r, sheet, mid, y0) - sing_exact) / sing_exact)});
    t.add({"sheet-near", "classical", fmt(n), fmt(r.size()), fmt(0.5), fmt(std::abs(near_sum(r) - near_exact) / near_exact)});
  }
  const QuadRule d12 = duffy_rule(Vec2::Zero(), 12);
  out.i_sing_err = std::abs(rule_inv_r(d12, sheet, mid, y0) - sing_exact) / sing_exact;
  out.i_near_err = std::abs(near_sum(classical_gl_2d(16)) - near_exact) / near_exact;
  t.add({"sheet-singular", "duffy", "12", fmt(d12.size()), fmt(min_distance(d12, sheet, mid, y0)), fmt(out.i_sing_err)});
  return out;
}

// ---------------------------------------------------------------- identity-study

Table identity_study_table(Geometry g, int l0, int l1, const std::vector<Scheme>& schemes, const std::vector<int>& n0s,
                           const GeometryParams& gp, DgwMode mode, int threads) {
  Table t;
  t.columns = {"geometry", "level", "scheme", "n0", "n_no", "n_qp", "mean_e_sl", "mean_e_dl"};
  for (int l = l0; l <= l1; ++l) {
    const SurfaceMesh m = build_geometry(g, l, gp);
    for (Scheme s : schemes)
      for (int n0 : n0s) {
        const IdentitySummary r = identity_study(m, {s, n0, mode}, threads);
        t.add({to_string(g), fmt(l), to_string(s), fmt(n0), fmt(m.n_no), fmt(r.n_qp), fmt(r.mean_sl), fmt(r.mean_dl)});
      }
  }
  return t;
}

// ---------------------------------------------------------------- hybrid-sheet

std::vector<SheetRow> hybrid_sheet(int l0, int l1, const std::vector<Scheme>& schemes, int n0, DgwMode mode, int threads) {
  std::vector<SheetRow> out;
  for (int l = l0; l <= l1; ++l) {
    const int N = 4 << (l - 1);
    const double h = 4.0 / N;
    const SurfaceMesh m = build_sheet(N, N, h);
    const double half = 2.0;
    // y0: center of element (i, i), i = floor(3N/8), a fixed region of the sheet
    const int i0 = 3 * N / 8;
    const Vec3 y0(-half + (i0 + 0.5) * h, -half + (i0 + 0.5) * h, 0);
    int a0 = -1;
    for (const auto& c : m.colpts)
      if ((c.y - y0).norm() < 1e-9) a0 = c.index;
    if (a0 < 0) throw std::logic_error("sheet reference point is not a collocation point");
    std::vector<SampledRule> regular(m.n_el());
    const QuadRule reg = classical_gl_2d(n0);
    for (int e = 0; e < m.n_el(); ++e) regular[e] = sample_rule(m, e, reg);
    for (Scheme s : schemes) {
      RuleCache cache;
      const SchemeConfig cfg{s, n0, mode};
      std::vector<double> rel(m.n_no);
      std::vector<long long> nqp(m.n_no);
      double e_tot = 0;
      auto row = [&](int A) {
        const CollocationPoint& c = m.colpts[A];
        const HybridRules hr = hybrid_rules(m, c, cfg, cache);
        nqp[A] = hr.n_points(m.n_el());
        std::vector<char> special(m.n_el(), 0);
        double num = 0;
        for (const auto& er : hr.special) {
          special[er.elem] = 1;
          num += rule_inv_r(*er.rule, m, er.elem, c.y);
        }
        for (int e = 0; e < m.n_el(); ++e) {
          if (special[e]) continue;
          const SampledRule& sr = regular[e];
          for (int i = 0; i < sr.size(); ++i) num += sr.wJ[i] / (sr.x.col(i) - c.y).norm();
        }
        const double ex = rect_inv_r(-half - c.y.x(), half - c.y.x(), -half - c.y.y(), half - c.y.y());
        rel[A] = std::abs(num - ex) / ex;
        if (A == a0) e_tot = std::abs(num - ex);
      };
      if (threads <= 1) {
        for (int A = 0; A < m.n_no; ++A) row(A);
      } else {
        std::vector<std::thread> pool;
        std::atomic<int> next{0};
        for (int k = 0; k < threads; ++k)
          pool.emplace_back([&] {
            for (int A = next++; A < m.n_no; A = next++) row(A);
          });
        for (auto& th : pool) th.join();
      }
      SheetRow r;
      r.level = l;
      r.n_no = m.n_no;
      r.scheme = s;
      for (long long v : nqp) r.n_qp += v;
      r.e_abs_tot = e_tot;
      for (double v : rel) r.e_rel_mean += v;
      r.e_rel_mean /= m.n_no;
      out.push_back(r);
    }
  }
  return out;
}

Table hybrid_sheet_table(const std::vector<SheetRow>& rows, int n0) {
  Table t;
  t.columns = {"level", "scheme", "n0", "n_no", "n_qp", "e_abs_tot", "mean_e_rel"};
  for (const auto& r : rows)
    t.add({fmt(r.level), to_string(r.scheme), fmt(n0), fmt(r.n_no), fmt(r.n_qp), fmt(r.e_abs_tot), fmt(r.e_rel_mean)});
  return t;
}

// ---------------------------------------------------------------- solve

Problem parse_problem(const std::string& s) {
  if (s == "rotating") return Problem::Rotating;
  if (s == "translating") return Problem::Translating;
  if (s == "ellipsoid-rise") return Problem::EllipsoidRise;
  throw std::invalid_argument("unknown problem '" + s + "'");
}

const char* to_string(Problem p) {
  switch (p) {
    case Problem::Rotating: return "rotating";
    case Problem::Translating: return "translating";
    case Problem::EllipsoidRise: return "ellipsoid-rise";
  }
  return "?";
}

double spheroid_drag(double eta, double a, double ecc, double vbar) {
  const double e = ecc;
  if (e > 0.5) return 16 * pi * eta * a * vbar * e * e * e / ((1 + e * e) * std::log((1 + e) / (1 - e)) - 2 * e);
  // same expression with the e^3 cancelled: 8 pi eta a vbar / sum_k 4k e^(2k-2) / (4k^2 - 1)
  double sum = 0, pw = 1;
  for (int k = 1; k < 200; ++k) {
    const double term = 4.0 * k * pw / (4.0 * k * k - 1);
    sum += term;
    if (term < 1e-17 * sum) break;
    pw *= e * e;
  }
  return 8 * pi * eta * a * vbar / sum;
}

namespace {

// element lookup by (patch, u, v) for meshes sharing patch parametrizations
class ParamLocator {
 public:
  explicit ParamLocator(const SurfaceMesh& m) : m_(m) {
    for (int e = 0; e < m.n_el(); ++e) by_patch_[m.elements[e].patch].push_back(e);
  }
  std::pair<int, Vec2> find(int patch, double u, double v) const {
    for (int e : by_patch_.at(patch)) {
      const Element& el = m_.elements[e];
      if (u >= el.u0 - 1e-14 && u <= el.u1 + 1e-14 && v >= el.v0 - 1e-14 && v <= el.v1 + 1e-14)
        return {e, Vec2(2 * (u - el.u0) / (el.u1 - el.u0) - 1, 2 * (v - el.v0) / (el.v1 - el.v0) - 1)};
    }
    throw std::out_of_range("parameter point outside patch");
  }

 private:
  const SurfaceMesh& m_;
  std::map<int, std::vector<int>> by_patch_;
};

struct Reference {
  SurfaceMesh mesh;
  SurfaceField t;
};

}  // namespace

namespace {

Vec3 boundary_at(const SolveParams& sp, const Vec3& x) {
  const Vec3 e3(0, 0, 1);
  return sp.problem == Problem::Rotating ? Vec3(sp.omega * e3.cross(x)) : Vec3(sp.vbar * e3);
}

double body_radius(const SolveParams& sp) { return sp.geometry == Geometry::Ellipsoid ? sp.gp.a : sp.gp.radius; }

// rotating/translating against closed forms, ellipsoid-rise against `ref`
void fill_errors(const SolveParams& sp, const SurfaceMesh& m, const SurfaceField& t, const Reference* ref, SolveRow& row) {
  const double R = body_radius(sp);
  const Vec3 e3(0, 0, 1);
  ErrorNorms en;
  if (sp.problem == Problem::Rotating) {
    const double tmax = 3 * sp.eta * sp.omega;
    en = error_norms(m, t, [&](const Vec3& x) { return Vec3(-3 * sp.eta * sp.omega * e3.cross(x) / R); },
                     [&](const Vec3&) { return tmax; });
  } else if (sp.problem == Problem::Translating) {
    const double t_abs = 1.5 * sp.eta * sp.vbar / R;
    en = error_norms(m, t, [&](const Vec3&) { return Vec3(-t_abs * e3); }, [&](const Vec3&) { return t_abs; });
  } else {
    if (!ref) throw std::logic_error("ellipsoid-rise needs a reference solution");
    // sample both fields at the GL(4) points of the coarse mesh, matched by patch parameters
    const ParamLocator loc(ref->mesh);
    const auto [g, w] = gauss_legendre_1d<double>(4);
    double num = 0, area = 0, tref_max = 0;
    std::vector<double> errs;
    for (int e = 0; e < m.n_el(); ++e) {
      const Element& el = m.elements[e];
      for (int b = 0; b < 4; ++b)
        for (int a = 0; a < 4; ++a) {
          const Vec2 xi(g(a), g(b));
          const double u = el.u0 + (xi(0) + 1) / 2 * (el.u1 - el.u0), vv = el.v0 + (xi(1) + 1) / 2 * (el.v1 - el.v0);
          const auto [re, rxi] = loc.find(el.patch, u, vv);
          const Vec3 th = field_at(m, t, e, xi);
          const Vec3 tr = field_at(ref->mesh, ref->t, re, rxi);
          const auto fr = m.frame(e, xi);
          const double d = (th - tr).norm();
          errs.push_back(d);
          num += d * d * fr.J * w(a) * w(b);
          area += fr.J * w(a) * w(b);
          tref_max = std::max(tref_max, tr.norm());
          en.max_traction = std::max(en.max_traction, th.norm());
          en.max_normal = std::max(en.max_normal, std::abs(th.dot(fr.n)));
        }
    }
    en.l2 = std::sqrt(num / area) / tref_max;
    for (double d : errs) en.max = std::max(en.max, d / tref_max);
  }
  row.e_l2 = en.l2;
  row.e_max = en.max;
  row.t_max = en.max_traction;
  row.tn_max = en.max_normal;
}

SolveRow evaluate(const SolveParams& sp, const SurfaceMesh& m, const SurfaceField& v, const SurfaceField& t, int n0,
                  const Reference* ref) {
  const double R = body_radius(sp);
  const Vec3 e3(0, 0, 1);
  SolveRow row;
  row.n_no = m.n_no;
  row.n0 = n0;
  fill_errors(sp, m, t, ref, row);

  // resultant: force along e3 for translation, torque about e3 for rotation
  const auto [g, w] = gauss_legendre_1d<double>(4);
  double load = 0;
  for (int e = 0; e < m.n_el(); ++e)
    for (int b = 0; b < 4; ++b)
      for (int a = 0; a < 4; ++a) {
        const Vec2 xi(g(a), g(b));
        const auto fr = m.frame(e, xi);
        const Vec3 th = field_at(m, t, e, xi);
        const double val = sp.problem == Problem::Rotating ? fr.x.cross(th).dot(e3) : th.dot(e3);
        load += val * fr.J * w(a) * w(b);
      }
  row.drag = load;
  if (sp.problem == Problem::Rotating)
    row.drag_exact = -8 * pi * sp.eta * sp.omega * R * R * R;
  else if (sp.problem == Problem::Translating)
    row.drag_exact = -6 * pi * sp.eta * R * sp.vbar;
  else
    row.drag_exact = -spheroid_drag(sp.eta, sp.gp.a, sp.gp.ecc, sp.vbar);

  try {
    row.v_axis = eval_velocity(m, v, t, sp.eta, Vec3(0, 0, 2 * R), n0);
    row.v_side = eval_velocity(m, v, t, sp.eta, Vec3(2 * R, 0, 0), n0);
    row.p_axis = eval_pressure(m, v, t, sp.eta, Vec3(0, 0, 2 * R), n0);
  } catch (const NearFieldError&) {
    row.v_axis = row.v_side = Vec3::Constant(std::numeric_limits<double>::quiet_NaN());
    row.p_axis = std::numeric_limits<double>::quiet_NaN();
  }
  return row;
}

}  // namespace

SurfaceField boundary_velocity(const SolveParams& sp, const SurfaceMesh& m) {
  return nodal_field(m, [&](const Vec3& x) { return boundary_at(sp, x); });
}

SolveRow evaluate_solution(const SolveParams& sp, const SurfaceMesh& m, const SurfaceField& v, const SurfaceField& t, int n0) {
  if (sp.problem == Problem::EllipsoidRise) throw std::invalid_argument("ellipsoid-rise is evaluated against a reference in solve_study");
  return evaluate(sp, m, v, t, n0, nullptr);
}

SolveOutput solve_study(const SolveParams& sp, int l0, int l1, const std::vector<Scheme>& schemes, const std::vector<int>& n0s,
                        DgwMode mode) {
  if (sp.problem == Problem::EllipsoidRise && sp.geometry != Geometry::Ellipsoid)
    throw std::invalid_argument("ellipsoid-rise requires the ellipsoid geometry");
  if (sp.geometry == Geometry::Sheet) throw std::invalid_argument("solve requires a closed geometry");

  std::optional<Reference> ref;
  if (sp.problem == Problem::EllipsoidRise) {
    const int lr = sp.ref_level > 0 ? sp.ref_level : l1 + 1;
    Reference r{build_geometry(sp.geometry, lr, sp.gp), {}};
    const BemSystem sys = assemble(r.mesh, {Scheme::DGr, sp.ref_n0, mode}, sp.eta, {sp.threads, sp.free_term});
    r.t = solve_dirichlet(sys, boundary_velocity(sp, r.mesh), sp.solver, nullptr, sp.max_iterations);
    ref = std::move(r);
  }

  SolveOutput out;
  for (int l = l0; l <= l1; ++l) {
    SurfaceMesh m = build_geometry(sp.geometry, l, sp.gp);
    const SurfaceField v = boundary_velocity(sp, m);
    for (Scheme s : schemes)
      for (int n0 : n0s) {
        const auto t0 = std::chrono::steady_clock::now();
        const BemSystem sys = assemble(m, {s, n0, mode}, sp.eta, {sp.threads, sp.free_term});
        SolveInfo info;
        const SurfaceField t = solve_dirichlet(sys, v, sp.solver, &info, sp.max_iterations);
        SolveRow row = evaluate(sp, m, v, t, n0, ref ? &*ref : nullptr);
        row.level = l;
        row.scheme = s;
        row.n_qp = sys.n_qp;
        row.iterations = info.iterations;
        row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        out.rows.push_back(row);
        out.last_v = v;
        out.last_t = t;
      }
    out.last_mesh = std::move(m);
  }
  return out;
}

Table solve_table(const SolveParams& sp, const std::vector<SolveRow>& rows, bool timing) {
  Table t;
  t.columns = {"problem", "geometry", "level", "scheme", "n0", "n_no", "n_qp", "e_t_l2", "e_t_max", "t_max", "tn_max",
               "load", "load_exact", "v_axis_z", "v_side_y", "v_side_z", "p_axis", "iterations"};
  if (timing) t.columns.push_back("seconds");
  for (const auto& r : rows) {
    std::vector<std::string> row = {to_string(sp.problem), to_string(sp.geometry), fmt(r.level), to_string(r.scheme), fmt(r.n0),
                                    fmt(r.n_no), fmt(r.n_qp), fmt(r.e_l2), fmt(r.e_max), fmt(r.t_max), fmt(r.tn_max),
                                    fmt(r.drag), fmt(r.drag_exact), fmt(r.v_axis.z()), fmt(r.v_side.y()), fmt(r.v_side.z()), fmt(r.p_axis),
                                    fmt(r.iterations)};
    if (timing) row.push_back(fmt(r.seconds));
    t.add(std::move(row));
  }
  return t;
}

}  // namespace sbem
