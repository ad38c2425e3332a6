#include "sbem/geometry.hpp"
#include "sbem/gauss.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>

namespace sbem {

const char* to_string(Loc l) {
  switch (l) {
    case Loc::Corner: return "corner";
    case Loc::Edge: return "edge";
    case Loc::Center: return "center";
    case Loc::Pole: return "pole";
  }
  return "?";
}

const char* to_string(ColType t) {
  switch (t) {
    case ColType::C: return "C";
    case ColType::E: return "E";
    case ColType::M: return "M";
    case ColType::Pole: return "pole";
    case ColType::PatchEdge: return "patch_edge";
    case ColType::PatchCorner: return "patch_corner";
  }
  return "?";
}

SpanEval NurbsPatch::eval_span(int iu, int iv, double u, double v) const {
  const auto bu = eval_basis_span(U, iu, u, 1);
  const auto bv = eval_basis_span(V, iv, v, 1);
  const int np = p() + 1, nq = q() + 1;
  SpanEval s;
  s.R.resize(np * nq);
  s.Ru.resize(np * nq);
  s.Rv.resize(np * nq);
  Eigen::Vector3d A = Eigen::Vector3d::Zero(), Au = A, Av = A;
  double W = 0, Wu = 0, Wv = 0;
  for (int b = 0; b < nq; ++b) {
    for (int a = 0; a < np; ++a) {
      const auto c = cps.col(index(iu - p() + a, iv - q() + b));
      const double w = c(3);
      const double n = bu.ders(0, a) * bv.ders(0, b) * w;
      const double nu_ = bu.ders(1, a) * bv.ders(0, b) * w;
      const double nv_ = bu.ders(0, a) * bv.ders(1, b) * w;
      const int k = a + np * b;
      s.R(k) = n;
      s.Ru(k) = nu_;
      s.Rv(k) = nv_;
      A += n * c.head<3>();
      Au += nu_ * c.head<3>();
      Av += nv_ * c.head<3>();
      W += n;
      Wu += nu_;
      Wv += nv_;
    }
  }
  s.x = A / W;
  s.xu = (Au - s.x * Wu) / W;
  s.xv = (Av - s.x * Wv) / W;
  s.Ru = (s.Ru - s.R * (Wu / W)) / W;
  s.Rv = (s.Rv - s.R * (Wv / W)) / W;
  s.R /= W;
  return s;
}

namespace {

HomogeneousNet<double> to_homogeneous(const Eigen::Matrix4Xd& c) {
  HomogeneousNet<double> h(4, c.cols());
  for (Eigen::Index i = 0; i < c.cols(); ++i) {
    h.col(i).head<3>() = c.col(i).head<3>() * c(3, i);
    h(3, i) = c(3, i);
  }
  return h;
}

Eigen::Matrix4Xd from_homogeneous(const HomogeneousNet<double>& h) {
  Eigen::Matrix4Xd c(4, h.cols());
  for (Eigen::Index i = 0; i < h.cols(); ++i) {
    c.col(i).head<3>() = h.col(i).head<3>() / h(3, i);
    c(3, i) = h(3, i);
  }
  return c;
}

std::vector<double> span_midpoints(const KnotVectord& kv) {
  std::vector<double> m;
  for (int i : kv.nonempty_spans()) m.push_back(0.5 * (kv.knots[i] + kv.knots[i + 1]));
  return m;
}

// ids of points equal within tol, numbered by first appearance
std::vector<int> dedupe(const std::vector<Vec3>& pts, double tol, int& n_unique) {
  const int n = static_cast<int>(pts.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return pts[a].x() < pts[b].x(); });
  std::vector<int> root(n);
  std::iota(root.begin(), root.end(), 0);
  auto find = [&](int i) {
    while (root[i] != i) i = root[i] = root[root[i]];
    return i;
  };
  for (int s = 0; s < n; ++s) {
    const int a = order[s];
    for (int t = s + 1; t < n && pts[order[t]].x() - pts[a].x() <= tol; ++t) {
      const int b = order[t];
      if ((pts[a] - pts[b]).norm() > tol) continue;
      const int ra = find(a), rb = find(b);
      if (ra != rb) root[std::max(ra, rb)] = std::min(ra, rb);
    }
  }
  for (int i = 0; i < n; ++i) root[i] = find(i);
  std::vector<int> id(n, -1), first(n, -1);
  n_unique = 0;
  for (int i = 0; i < n; ++i) {
    if (first[root[i]] < 0) first[root[i]] = n_unique++;
    id[i] = first[root[i]];
  }
  return id;
}

double snap(double t) {
  for (double c : {-1.0, 0.0, 1.0})
    if (std::abs(t - c) < 1e-9) return c;
  return t;
}

}  // namespace

void NurbsPatch::insert_knot_u(double u) {
  const int n = nu(), m = nv();
  auto kv = U;
  std::vector<HomogeneousNet<double>> rows;
  for (int j = 0; j < m; ++j) {
    kv = U;
    HomogeneousNet<double> h = to_homogeneous(cps.middleCols(j * n, n));
    insert_knot(kv, h, u);
    rows.push_back(std::move(h));
  }
  U = kv;
  Eigen::Matrix4Xd c(4, (n + 1) * m);
  for (int j = 0; j < m; ++j) c.middleCols(j * (n + 1), n + 1) = from_homogeneous(rows[j]);
  cps = std::move(c);
}

void NurbsPatch::insert_knot_v(double v) {
  const int n = nu(), m = nv();
  auto kv = V;
  Eigen::Matrix4Xd c(4, n * (m + 1));
  for (int i = 0; i < n; ++i) {
    kv = V;
    Eigen::Matrix4Xd col(4, m);
    for (int j = 0; j < m; ++j) col.col(j) = cps.col(i + n * j);
    HomogeneousNet<double> h = to_homogeneous(col);
    insert_knot(kv, h, v);
    auto back = from_homogeneous(h);
    for (int j = 0; j <= m; ++j) c.col(i + n * j) = back.col(j);
  }
  V = kv;
  cps = std::move(c);
}

void NurbsPatch::bisect_spans() {
  for (double u : span_midpoints(U)) insert_knot_u(u);
  for (double v : span_midpoints(V)) insert_knot_v(v);
}

ElementPoint SurfaceMesh::eval(int e, const Vec2& xi) const {
  const Element& el = elements[e];
  const NurbsPatch& P = patches[el.patch];
  const double hu = 0.5 * (el.u1 - el.u0), hv = 0.5 * (el.v1 - el.v0);
  auto s = P.eval_span(el.iu, el.iv, el.u0 + (xi(0) + 1) * hu, el.v0 + (xi(1) + 1) * hv);
  ElementPoint out;
  out.x = s.x;
  out.a1 = s.xu * hu;
  out.a2 = s.xv * hv;
  Vec3 c = out.a1.cross(out.a2);
  out.J = c.norm();
  if (out.J < 1e-14 * scale * scale) {
    out.degenerate = true;
    Vec2 xi2 = xi - 1e-8 * xi.cwiseSign();
    auto s2 = P.eval_span(el.iu, el.iv, el.u0 + (xi2(0) + 1) * hu, el.v0 + (xi2(1) + 1) * hv);
    c = s2.xu.cross(s2.xv);
    out.n = c.normalized();
  } else {
    out.n = c / out.J;
  }
  out.R = std::move(s.R);
  return out;
}

SurfaceFrame SurfaceMesh::frame(int e, const Vec2& xi) const { return eval(e, xi); }

Vec3 SurfaceMesh::position(int e, const Vec2& xi) const { return eval(e, xi).x; }

bool SurfaceMesh::shares_vertex(int e, int f) const {
  for (int a : elements[e].verts)
    for (int b : elements[f].verts)
      if (a == b) return true;
  return false;
}

Classification SurfaceMesh::classify(const CollocationPoint& c) const {
  Classification cl;
  for (const auto& s : c.sites) cl.singular.push_back(s.elem);
  std::sort(cl.singular.begin(), cl.singular.end());
  if (c.pole()) return cl;
  std::vector<int> near;
  for (int e : cl.singular)
    for (int f : neighbors[e])
      if (!std::binary_search(cl.singular.begin(), cl.singular.end(), f)) near.push_back(f);
  std::sort(near.begin(), near.end());
  near.erase(std::unique(near.begin(), near.end()), near.end());
  cl.near = std::move(near);
  return cl;
}

SurfaceMesh assemble_mesh(std::vector<NurbsPatch> patches, bool closed, std::string name) {
  SurfaceMesh m;
  m.name = std::move(name);
  m.closed = closed;

  std::vector<Vec3> pts;
  for (const auto& P : patches)
    for (Eigen::Index i = 0; i < P.cps.cols(); ++i) pts.push_back(P.cps.col(i).head<3>());
  Vec3 lo = pts[0], hi = pts[0];
  for (const auto& x : pts) {
    lo = lo.cwiseMin(x);
    hi = hi.cwiseMax(x);
  }
  m.scale = (hi - lo).norm();
  const double tol = 1e-10 * m.scale;

  std::vector<int> id = dedupe(pts, tol, m.n_no);
  std::vector<Vec3> canon(m.n_no);
  std::vector<bool> seen(m.n_no, false);
  for (size_t k = 0; k < pts.size(); ++k)
    if (!seen[id[k]]) {
      canon[id[k]] = pts[k];
      seen[id[k]] = true;
    }
  {
    size_t k = 0;
    for (auto& P : patches) {
      std::vector<int> map(P.cps.cols());
      for (Eigen::Index i = 0; i < P.cps.cols(); ++i, ++k) {
        map[i] = id[k];
        P.cps.col(i).head<3>() = canon[id[k]];
      }
      m.node_of.push_back(std::move(map));
    }
  }
  m.patches = std::move(patches);
  m.node_pos = std::move(canon);

  // elements and their corner vertices
  std::vector<Vec3> corners;
  std::vector<std::map<std::pair<int, int>, int>> elem_at(m.patches.size());
  for (size_t pi = 0; pi < m.patches.size(); ++pi) {
    const auto& P = m.patches[pi];
    for (int iv : P.V.nonempty_spans()) {
      for (int iu : P.U.nonempty_spans()) {
        Element el;
        el.patch = static_cast<int>(pi);
        el.iu = iu;
        el.iv = iv;
        el.u0 = P.U.knots[iu];
        el.u1 = P.U.knots[iu + 1];
        el.v0 = P.V.knots[iv];
        el.v1 = P.V.knots[iv + 1];
        for (int b = 0; b <= P.q(); ++b)
          for (int a = 0; a <= P.p(); ++a) el.nodes.push_back(m.node_of[pi][P.index(iu - P.p() + a, iv - P.q() + b)]);
        const double cu[4] = {el.u0, el.u1, el.u1, el.u0}, cv[4] = {el.v0, el.v0, el.v1, el.v1};
        for (int k = 0; k < 4; ++k) corners.push_back(P.eval_span(iu, iv, cu[k], cv[k]).x);
        elem_at[pi][{iu, iv}] = static_cast<int>(m.elements.size());
        m.elements.push_back(std::move(el));
      }
    }
  }
  int n_vert = 0;
  std::vector<int> vid = dedupe(corners, tol, n_vert);
  m.vertex_pos.resize(n_vert);
  std::vector<std::vector<int>> vert_elems(n_vert);
  for (int e = 0; e < m.n_el(); ++e) {
    auto& el = m.elements[e];
    for (int k = 0; k < 4; ++k) {
      el.verts[k] = vid[4 * e + k];
      m.vertex_pos[el.verts[k]] = corners[4 * e + k];
    }
    for (int k = 0; k < 4; ++k) el.degenerate[k] = el.verts[k] == el.verts[(k + 1) % 4];
    for (int k = 0; k < 4; ++k) {
      auto& ve = vert_elems[el.verts[k]];
      if (ve.empty() || ve.back() != e) ve.push_back(e);
    }
  }
  m.neighbors.resize(m.n_el());
  for (int e = 0; e < m.n_el(); ++e) {
    auto& nb = m.neighbors[e];
    for (int v : m.elements[e].verts)
      for (int f : vert_elems[v])
        if (f != e) nb.push_back(f);
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
  }

  // collocation points at the Greville abscissae
  std::vector<std::vector<double>> gu, gv;
  for (const auto& P : m.patches) {
    gu.push_back(greville_abscissae(P.U));
    gv.push_back(greville_abscissae(P.V));
  }
  std::vector<std::vector<std::pair<int, int>>> occ(m.n_no);
  for (size_t pi = 0; pi < m.patches.size(); ++pi) {
    const auto& P = m.patches[pi];
    for (int j = 0; j < P.nv(); ++j)
      for (int i = 0; i < P.nu(); ++i) occ[m.node_of[pi][P.index(i, j)]].push_back({static_cast<int>(pi), P.index(i, j)});
  }
  auto spans_containing = [](const KnotVectord& kv, double u) {
    std::vector<int> s;
    const double eps = 1e-12 * (kv.back() - kv.front());
    for (int i : kv.nonempty_spans())
      if (kv.knots[i] - eps <= u && u <= kv.knots[i + 1] + eps) s.push_back(i);
    return s;
  };
  m.colpts.resize(m.n_no);
  for (int g = 0; g < m.n_no; ++g) {
    CollocationPoint& c = m.colpts[g];
    c.index = g;
    bool first = true;
    std::vector<int> patches_hit;
    for (auto [pi, k] : occ[g]) {
      const auto& P = m.patches[pi];
      const int i = k % P.nu(), j = k / P.nu();
      const double u = gu[pi][i], v = gv[pi][j];
      if (first) {
        c.patch = pi;
        c.uv = {u, v};
        c.y = P.eval(u, v).x;
        first = false;
      }
      for (int iv : spans_containing(P.V, v)) {
        for (int iu : spans_containing(P.U, u)) {
          const int e = elem_at[pi].at({iu, iv});
          if (std::any_of(c.sites.begin(), c.sites.end(), [&](const SingularSite& s) { return s.elem == e; })) continue;
          const Element& el = m.elements[e];
          SingularSite s;
          s.elem = e;
          s.xi = {snap(2 * (u - el.u0) / (el.u1 - el.u0) - 1), snap(2 * (v - el.v0) / (el.v1 - el.v0) - 1)};
          const int on_edge = (std::abs(s.xi(0)) == 1) + (std::abs(s.xi(1)) == 1);
          const bool zero0 = s.xi(0) == 0 || std::abs(s.xi(0)) == 1;
          const bool zero1 = s.xi(1) == 0 || std::abs(s.xi(1)) == 1;
          if (!zero0 || !zero1) throw DomainError("collocation point not at a corner, edge midpoint or center");
          s.loc = on_edge == 2 ? Loc::Corner : on_edge == 1 ? Loc::Edge : Loc::Center;
          // collapsed edges: 0 is eta=-1, 1 is xi=+1, 2 is eta=+1, 3 is xi=-1
          const bool on[4] = {s.xi(1) == -1, s.xi(0) == 1, s.xi(1) == 1, s.xi(0) == -1};
          for (int ed = 0; ed < 4; ++ed) {
            if (el.degenerate[ed] && on[ed]) {
              static const Vec2 start[4] = {{-1, -1}, {1, -1}, {1, 1}, {-1, 1}};
              if (s.loc != Loc::Corner) s.xi = start[ed];
              s.loc = Loc::Pole;
            }
          }
          c.sites.push_back(s);
          patches_hit.push_back(pi);
        }
      }
    }
    std::sort(patches_hit.begin(), patches_hit.end());
    const bool multi = std::unique(patches_hit.begin(), patches_hit.end()) - patches_hit.begin() > 1;
    bool any_pole = std::any_of(c.sites.begin(), c.sites.end(), [](const SingularSite& s) { return s.loc == Loc::Pole; });
    if (any_pole) {
      for (auto& s : c.sites)
        if (s.loc != Loc::Pole) s.loc = Loc::Pole;
      c.type = ColType::Pole;
    } else {
      switch (c.sites.front().loc) {
        case Loc::Center: c.type = ColType::M; break;
        case Loc::Edge: c.type = multi ? ColType::PatchEdge : ColType::E; break;
        default: c.type = multi ? ColType::PatchCorner : ColType::C; break;
      }
    }
  }
  return m;
}

SurfaceMesh build_sheet(int nx, int ny, double L) {
  NurbsPatch P;
  P.U = uniform_open<double>(2, nx);
  P.V = uniform_open<double>(2, ny);
  const auto gu = greville_abscissae(P.U), gv = greville_abscissae(P.V);
  P.cps.resize(4, P.nu() * P.nv());
  for (int j = 0; j < P.nv(); ++j)
    for (int i = 0; i < P.nu(); ++i)
      P.cps.col(P.index(i, j)) << (gu[i] - 0.5) * nx * L, (gv[j] - 0.5) * ny * L, 0, 1;
  SurfaceMesh m = assemble_mesh({P}, false, "sheet");
  m.planar = true;
  return m;
}

SurfaceMesh build_single_patch_sphere(int level, double R) {
  const double s = 1 / std::numbers::sqrt2;
  NurbsPatch P;
  P.U = KnotVectord(2, {0, 0, 0, .25, .25, .5, .5, .75, .75, 1, 1, 1});
  P.V = KnotVectord(2, {0, 0, 0, .5, .5, 1, 1, 1});
  const double cx[9] = {1, 1, 0, -1, -1, -1, 0, 1, 1}, cy[9] = {0, 1, 1, 1, 0, -1, -1, -1, 0};
  const double cw[9] = {1, s, 1, s, 1, s, 1, s, 1};
  const double pr[5] = {0, 1, 1, 1, 0}, pz[5] = {-1, -1, 0, 1, 1}, pw[5] = {1, s, 1, s, 1};
  P.cps.resize(4, 45);
  for (int j = 0; j < 5; ++j)
    for (int i = 0; i < 9; ++i) P.cps.col(P.index(i, j)) << R * cx[i] * pr[j], R * cy[i] * pr[j], R * pz[j], cw[i] * pw[j];
  for (int l = 0; l < level; ++l) P.bisect_spans();
  return assemble_mesh({P}, true, "single-patch-sphere");
}

namespace {

std::vector<NurbsPatch> six_patches(int level, const Eigen::Vector3d& scale) {
  const int N = 1 << level;
  const KnotVectord kv = uniform_open<double>(2, N);
  const auto g = greville_abscissae(kv);
  const int n = kv.n_basis();
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const auto b = eval_basis(kv, g[i], 0);
    for (int a = 0; a <= 2; ++a) M(i, b.first() + a) = b.ders(0, a);
  }
  const Eigen::MatrixXd Minv = M.partialPivLu().inverse();
  std::vector<NurbsPatch> out;
  for (int axis = 0; axis < 3; ++axis) {
    for (int sign : {1, -1}) {
      int e1 = (axis + 1) % 3, e2 = (axis + 2) % 3;
      if (sign < 0) std::swap(e1, e2);
      std::array<Eigen::MatrixXd, 3> X;
      for (auto& c : X) c.resize(n, n);
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          Eigen::Vector3d c = Eigen::Vector3d::Zero();
          c(axis) = sign;
          c(e1) = std::tan(std::numbers::pi / 4 * (2 * g[i] - 1));
          c(e2) = std::tan(std::numbers::pi / 4 * (2 * g[j] - 1));
          c.normalize();
          for (int d = 0; d < 3; ++d) X[d](i, j) = c(d);
        }
      }
      NurbsPatch P;
      P.U = kv;
      P.V = kv;
      P.cps.resize(4, n * n);
      std::array<Eigen::MatrixXd, 3> C;
      for (int d = 0; d < 3; ++d) C[d] = Minv * X[d] * Minv.transpose();
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) P.cps.col(P.index(i, j)) << scale(0) * C[0](i, j), scale(1) * C[1](i, j), scale(2) * C[2](i, j), 1;
      out.push_back(std::move(P));
    }
  }
  return out;
}

}  // namespace

SurfaceMesh build_six_patch_sphere(int level, double R) {
  return assemble_mesh(six_patches(level, Eigen::Vector3d::Constant(R)), true, "six-patch-sphere");
}

SurfaceMesh build_ellipsoid(int level, double a, double ecc) {
  if (!(ecc >= 0 && ecc < 1)) throw DomainError("eccentricity must lie in [0,1)");
  if (!(a > 0)) throw DomainError("semi-major axis must be positive");
  const double b = a * std::sqrt(1 - ecc * ecc);
  return assemble_mesh(six_patches(level, {b, b, a}), true, "ellipsoid");
}

namespace {

template <typename F>
double surface_integral(const SurfaceMesh& m, int n, F&& f) {
  const auto [x, w] = gauss_legendre_1d<double>(n);
  double s = 0;
  for (int e = 0; e < m.n_el(); ++e)
    for (int k = 0; k < n; ++k)
      for (int j = 0; j < n; ++j) {
        const auto fr = m.frame(e, {x(j), x(k)});
        s += f(fr) * fr.J * w(j) * w(k);
      }
  return s;
}

}  // namespace

double surface_area(const SurfaceMesh& m, int n) {
  return surface_integral(m, n, [](const SurfaceFrame&) { return 1.0; });
}

double enclosed_volume(const SurfaceMesh& m, int n) {
  return surface_integral(m, n, [](const SurfaceFrame& f) { return f.x.dot(f.n) / 3; });
}

double radius_error_l2(const SurfaceMesh& m, double R, int n) {
  const double s = surface_integral(m, n, [R](const SurfaceFrame& f) {
    const double e = (f.x.norm() - R) / R;
    return e * e;
  });
  return std::sqrt(s / (4 * std::numbers::pi * R * R));
}

}  // namespace sbem
