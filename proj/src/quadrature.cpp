#include "sbem/quadrature.hpp"

#include <algorithm>
#include <cmath>

namespace sbem {

const char* to_string(RuleKind k) {
  switch (k) {
    case RuleKind::ClassicalGL: return "gauss";
    case RuleKind::ModifiedGL: return "modified-gauss";
    case RuleKind::Duffy: return "duffy";
    case RuleKind::AdjustedTable: return "adjusted-table";
    case RuleKind::AdjustedFit: return "adjusted-fit";
  }
  return "?";
}

const char* to_string(Scheme s) {
  switch (s) {
    case Scheme::G: return "G";
    case Scheme::DG: return "DG";
    case Scheme::DGr: return "DGr";
    case Scheme::DGw: return "DGw";
  }
  return "?";
}

Scheme parse_scheme(const std::string& s) {
  std::string l = s;
  std::transform(l.begin(), l.end(), l.begin(), ::tolower);
  if (l == "g") return Scheme::G;
  if (l == "dg") return Scheme::DG;
  if (l == "dgr") return Scheme::DGr;
  if (l == "dgw") return Scheme::DGw;
  throw std::invalid_argument("unknown scheme " + s);
}

QuadRule classical_gl_2d(int n) {
  const auto [x, w] = gauss_legendre_1d<double>(n);
  QuadRule r;
  r.kind = RuleKind::ClassicalGL;
  r.n = n;
  r.xi.resize(2, n * n);
  r.w.resize(n * n);
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j) {
      r.xi.col(j + n * k) << x(j), x(k);
      r.w(j + n * k) = w(j) * w(k);
    }
  return r;
}

QuadRule modified_gl(int p, int q, int n) {
  const int nu = (n + p - 1) / p, nv = (n + q - 1) / q;
  const auto [xu, wu] = gauss_legendre_1d<double>(nu);
  const auto [xv, wv] = gauss_legendre_1d<double>(nv);
  QuadRule r;
  r.kind = RuleKind::ModifiedGL;
  r.n = n;
  r.xi.resize(2, p * q * nu * nv);
  r.w.resize(p * q * nu * nv);
  int i = 0;
  for (int t = 0; t < q; ++t)
    for (int s = 0; s < p; ++s)
      for (int k = 0; k < nv; ++k)
        for (int j = 0; j < nu; ++j, ++i) {
          r.xi.col(i) << -1 + (2 * s + 1 + xu(j)) / p, -1 + (2 * t + 1 + xv(k)) / q;
          r.w(i) = wu(j) * wv(k) / (p * q);
        }
  return r;
}

QuadRule duffy_rule(const Vec2& xi0, int n) {
  auto allowed = [](double t) { return t == -1 || t == 0 || t == 1; };
  if (!allowed(xi0(0)) || !allowed(xi0(1))) throw UnsupportedCollocation("duffy apex must be a corner, edge midpoint or center");
  // sub-rectangles having xi0 as a corner
  std::vector<double> ex, ey;
  for (double t : {-1.0, 1.0}) {
    if (t != xi0(0)) ex.push_back(t);
    if (t != xi0(1)) ey.push_back(t);
  }
  const auto [x, w] = gauss_legendre_1d<double>(n);
  const Eigen::VectorXd s = (x.array() + 1) / 2, ws = w / 2;
  QuadRule r;
  r.kind = RuleKind::Duffy;
  r.n = n;
  const int ntri = static_cast<int>(ex.size() * ey.size()) * 2;
  r.xi.resize(2, ntri * n * n);
  r.w.resize(ntri * n * n);
  int i = 0;
  auto triangle = [&](const Vec2& P0, const Vec2& P1, const Vec2& P2) {
    const Vec2 d1 = P1 - P0, d2 = P2 - P0;
    const double det = std::abs(d1(0) * d2(1) - d1(1) * d2(0));
    for (int k = 0; k < n; ++k)
      for (int j = 0; j < n; ++j, ++i) {
        const double u = s(j), v = s(k);
        r.xi.col(i) = P0 + u * ((1 - v) * d1 + v * d2);
        r.w(i) = ws(j) * ws(k) * u * det;
      }
  };
  for (double cy : ey)
    for (double cx : ex) {
      const Vec2 A(cx, xi0(1)), Q(cx, cy), B(xi0(0), cy);
      triangle(xi0, A, Q);
      triangle(xi0, Q, B);
    }
  return r;
}

const std::array<AdjustedWeightSet, 7>& adjusted_weight_table() {
  static const std::array<AdjustedWeightSet, 7> t = {{
      {1, {-2, 0}, {2.31938557634487e-03, -3.96194342728695e-04, 6.73693894590655e-04, -1.79631123847407e-03,
                    -6.39888952746481e-03, 2.35720567649134e-03, 2.31938557634498e-03, -3.96194342729583e-04,
                    6.73693894590766e-04}},
      {2, {-2, -2}, {-3.06785320861036e-04, -7.65922184471912e-05, -8.35189243303947e-05, -7.65922184474688e-05,
                     9.40174607438005e-04, -1.18292775950657e-04, -8.35189243302836e-05, -1.18292775950990e-04,
                     -1.14956900993113e-04}},
      {3, {-3, -1}, {2.91091742066762e-04, -5.18107361679232e-04, 3.01814399334244e-04, 2.78864715425431e-04,
                     -4.34093711446204e-04, 1.80583631911146e-04, -1.15997317956140e-04, 1.52292730246639e-05,
                     6.76167776109127e-06}},
      {4, {-3, -3}, {-6.54575192148843e-05, 9.95820994587060e-06, -3.87801753661265e-05, 9.95820994509344e-06,
                     1.74968939684494e-04, -1.01082187085044e-05, -3.87801753655159e-05, -1.01082187095591e-05,
                     -3.27884950691026e-05}},
      {5, {-2, -1}, {6.09298124450708e-04, -3.06041383078942e-03, 1.56570492962638e-03, 2.47740158828003e-03,
                     -1.36002345481279e-04, 3.23573666747901e-04, -1.52026938222949e-03, 1.03304298742501e-04,
                     -1.93807081374009e-04}},
      {6, {0, -3}, {4.32446315561663e-04, -8.30579832303280e-05, 4.32446315561719e-04, -2.18624664881650e-04,
                    -1.21107604659743e-03, -2.18624664881706e-04, 2.20203796807650e-04, 3.91571815489933e-04,
                    2.20203796807483e-04}},
      {7, {-2, -3}, {-5.27414657617853e-05, 1.80107109839511e-04, -1.42299297342940e-04, -1.98281169518255e-04,
                     2.01683928024110e-04, -1.62236018943496e-05, 6.72447376661167e-05, 4.48306966693846e-06,
                     -4.43308431077871e-05}},
  }};
  return t;
}

const std::array<D4, 8>& d4_group() {
  static const std::array<D4, 8> g = [] {
    std::array<D4, 8> out;
    int k = 0;
    for (int swap = 0; swap < 2; ++swap)
      for (int sx : {1, -1})
        for (int sy : {1, -1}) {
          D4 m = D4::Zero();
          if (swap) {
            m(0, 1) = sx;
            m(1, 0) = sy;
          } else {
            m(0, 0) = sx;
            m(1, 1) = sy;
          }
          out[k++] = m;
        }
    return out;
  }();
  return g;
}

std::optional<std::pair<int, D4>> match_adjusted_set(const Eigen::Vector2i& offset) {
  for (const auto& s : adjusted_weight_table())
    for (const auto& g : d4_group())
      if (g * s.offset == offset) return std::make_pair(s.id, g);
  return std::nullopt;
}

QuadRule adjusted_from_table(int set, const D4& g) {
  const auto& dw = adjusted_weight_table().at(set - 1).dw;
  QuadRule r = classical_gl_2d(3);
  r.kind = RuleKind::AdjustedTable;
  r.note = "set " + std::to_string(set);
  // canonical lattice position of actual point B is g^T * B
  for (int k = 0; k < 3; ++k)
    for (int j = 0; j < 3; ++j) {
      const Eigen::Vector2i c = g.transpose() * Eigen::Vector2i(j - 1, k - 1);
      r.w(j + 3 * k) += dw[(c(0) + 1) + 3 * (c(1) + 1)];
    }
  return r;
}

namespace {

const std::array<Eigen::Vector2i, 4> kCorner = {{{-1, -1}, {1, -1}, {1, 1}, {-1, 1}}};

const std::array<Eigen::Matrix2i, 4>& rotations() {
  static const std::array<Eigen::Matrix2i, 4> r = [] {
    std::array<Eigen::Matrix2i, 4> o;
    o[0] << 1, 0, 0, 1;
    o[1] << 0, -1, 1, 0;
    o[2] << -1, 0, 0, -1;
    o[3] << 0, 1, -1, 0;
    return o;
  }();
  return r;
}

std::optional<Eigen::Vector2i> lattice_point(const Vec2& xi) {
  const Eigen::Vector2i r(static_cast<int>(std::lround(xi(0))), static_cast<int>(std::lround(xi(1))));
  if ((xi - r.cast<double>()).norm() > 1e-9) return std::nullopt;
  return r;
}

}  // namespace

std::optional<Eigen::Vector2i> near_offset(const SurfaceMesh& m, int elem, const CollocationPoint& c) {
  const Element& N = m.elements[elem];
  // shared edge: S corners (a, a+1) coincide with N corners (b, b+1) or (b+1, b)
  for (const auto& site : c.sites) {
    const Element& S = m.elements[site.elem];
    auto xs = lattice_point(site.xi);
    if (!xs) continue;
    for (int a = 0; a < 4; ++a) {
      const int a2 = (a + 1) % 4;
      if (S.verts[a] == S.verts[a2]) continue;
      for (int b = 0; b < 4; ++b)
        for (int b2 : {(b + 1) % 4, (b + 3) % 4}) {
          if (N.verts[b] != S.verts[a] || N.verts[b2] != S.verts[a2]) continue;
          for (const auto& R : rotations()) {
            if (R * (kCorner[a2] - kCorner[a]) != kCorner[b2] - kCorner[b]) continue;
            const Eigen::Vector2i t = kCorner[b] - R * kCorner[a];
            if (t != kCorner[b] + kCorner[b2]) continue;
            return Eigen::Vector2i(R * *xs + t);
          }
        }
    }
  }
  // shared vertex only: S lies diagonally across corner b of N
  for (const auto& site : c.sites) {
    const Element& S = m.elements[site.elem];
    auto xs = lattice_point(site.xi);
    if (!xs) continue;
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) {
        if (N.verts[b] != S.verts[a]) continue;
        for (const auto& R : rotations()) {
          if (R * kCorner[a] != -kCorner[b]) continue;
          return Eigen::Vector2i(R * *xs + 2 * kCorner[b]);
        }
      }
  }
  return std::nullopt;
}

FitResult moment_fit_adjusted(const SurfaceMesh& m, int elem, const Vec3& y) {
  static const QuadRule ref = classical_gl_2d(16);
  FitResult out;
  out.rule = classical_gl_2d(3);
  out.rule.kind = RuleKind::AdjustedFit;
  const int nb = static_cast<int>(m.elements[elem].nodes.size());
  if (nb != 9) throw FitFailure("moment fitting needs biquadratic elements");
  Eigen::VectorXd f = Eigen::VectorXd::Zero(nb);
  for (int i = 0; i < ref.size(); ++i) {
    const auto p = m.eval(elem, ref.xi.col(i));
    f += p.R * (p.J * ref.w(i) / (p.x - y).norm());
  }
  Eigen::MatrixXd A(nb, out.rule.size());
  for (int b = 0; b < out.rule.size(); ++b) {
    const auto p = m.eval(elem, out.rule.xi.col(b));
    A.col(b) = p.R * (p.J / (p.x - y).norm());
  }
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
  out.rcond = lu.rcond();
  if (!(out.rcond > 1e-14)) throw FitFailure("ill-conditioned moment system");
  out.rule.w = lu.solve(f);
  out.residual = (A * out.rule.w - f).lpNorm<Eigen::Infinity>() / f.lpNorm<Eigen::Infinity>();
  return out;
}

template <typename F>
std::shared_ptr<const QuadRule> RuleCache::get(const Key& k, F&& make) {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = rules_.find(k);
  if (it != rules_.end()) return it->second;
  auto r = std::make_shared<const QuadRule>(make());
  rules_.emplace(k, r);
  return r;
}

std::shared_ptr<const QuadRule> RuleCache::classical(int n) {
  return get({0, n, 0, 0, 0, 0}, [&] { return classical_gl_2d(n); });
}

std::shared_ptr<const QuadRule> RuleCache::modified(int p, int q, int n) {
  return get({1, n, p, q, 0, 0}, [&] { return modified_gl(p, q, n); });
}

std::shared_ptr<const QuadRule> RuleCache::duffy(const Vec2& xi0, int n) {
  const int a = static_cast<int>(std::lround(xi0(0))), b = static_cast<int>(std::lround(xi0(1)));
  return get({2, n, a, b, 0, 0}, [&] { return duffy_rule(xi0, n); });
}

std::shared_ptr<const QuadRule> RuleCache::table(int set, const D4& g) {
  return get({3, set, g(0, 0), g(0, 1), g(1, 0), g(1, 1)}, [&] { return adjusted_from_table(set, g); });
}

long long HybridRules::n_points(int n_el) const {
  long long s = 0;
  for (const auto& r : special) s += r.rule->size();
  return s + static_cast<long long>(n_el - static_cast<int>(special.size())) * regular->size();
}

HybridRules hybrid_rules(const SurfaceMesh& m, const CollocationPoint& c, const SchemeConfig& cfg, RuleCache& cache) {
  const int n0 = cfg.n0;
  HybridRules h;
  h.regular = cache.classical(n0);
  const Classification cl = m.classify(c);
  bool pole_adjacent = false;
  for (const auto& s : c.sites) {
    const Element& el = m.elements[s.elem];
    pole_adjacent = pole_adjacent || el.touches_pole();
    std::shared_ptr<const QuadRule> r;
    if (cfg.scheme == Scheme::G) {
      const bool at_corner = s.loc == Loc::Corner || s.loc == Loc::Pole;
      r = at_corner ? cache.classical(n0) : cache.modified(m.patches[el.patch].p(), m.patches[el.patch].q(), n0);
    } else {
      r = cache.duffy(s.xi, 2 * n0);
    }
    h.special.push_back({s.elem, r});
  }
  h.n_singular = static_cast<int>(h.special.size());
  if (cfg.scheme == Scheme::DGr) {
    for (int f : cl.near) h.special.push_back({f, cache.classical(2 * n0)});
  } else if (cfg.scheme == Scheme::DGw) {
    for (int f : cl.near) {
      if (pole_adjacent && m.elements[f].touches_pole()) {
        h.special.push_back({f, cache.classical(2 * n0)});
        continue;
      }
      std::shared_ptr<const QuadRule> r;
      std::string why;
      if (cfg.dgw_mode == DgwMode::Table) {
        if (auto off = near_offset(m, f, c))
          if (auto match = match_adjusted_set(*off)) r = cache.table(match->first, match->second);
        if (!r) why = "no table configuration; ";
      }
      if (!r) {
        try {
          auto fit = moment_fit_adjusted(m, f, c.y);
          fit.rule.note = why + fit.rule.note;
          r = std::make_shared<const QuadRule>(std::move(fit.rule));
        } catch (const FitFailure& e) {
          auto g = classical_gl_2d(16);
          g.note = why + "fit failed: " + e.what();
          r = std::make_shared<const QuadRule>(std::move(g));
        }
      }
      h.special.push_back({f, r});
    }
  }
  return h;
}

double min_distance(const QuadRule& rule, const SurfaceMesh& m, int elem, const Vec3& y) {
  double d = std::numeric_limits<double>::infinity();
  for (int i = 0; i < rule.size(); ++i) d = std::min(d, (m.position(elem, rule.xi.col(i)) - y).norm());
  return d;
}

SampledRule sample_rule(const SurfaceMesh& m, int elem, const QuadRule& rule) {
  SampledRule s;
  const int n = rule.size();
  const int nb = static_cast<int>(m.elements[elem].nodes.size());
  s.x.resize(3, n);
  s.n.resize(3, n);
  s.wJ.resize(n);
  s.R.resize(nb, n);
  for (int i = 0; i < n; ++i) {
    const auto p = m.eval(elem, rule.xi.col(i));
    s.x.col(i) = p.x;
    s.n.col(i) = p.n;
    s.wJ(i) = p.J * rule.w(i);
    s.R.col(i) = p.R;
  }
  return s;
}

}  // namespace sbem
