#include "sbem/bem.hpp"
#include "sbem/kernels.hpp"

#include <unsupported/Eigen/IterativeSolvers>

#include <atomic>
#include <bit>
#include <cmath>
#include <cstdint>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <numbers>
#include <thread>

namespace sbem {

namespace {

constexpr double pi = std::numbers::pi;

std::uint64_t to_little(std::uint64_t n) {
  if constexpr (std::endian::native == std::endian::big) {
    std::uint64_t r = 0;
    for (int k = 0; k < 8; ++k) r |= ((n >> (8 * k)) & 0xff) << (8 * (7 - k));
    return r;
  }
  return n;
}

template <typename F>
void parallel_for(int n, int threads, F&& f) {
  if (threads <= 1 || n < 2) {
    for (int i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr err;
  std::mutex err_mu;
  for (int k = 0; k < threads; ++k)
    pool.emplace_back([&] {
      try {
        for (int i = next++; i < n; i = next++) f(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!err) err = std::current_exception();
        next = n;
      }
    });
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

// regular-rule samples for every element, shared by all collocation points
std::vector<SampledRule> sample_all(const SurfaceMesh& m, const QuadRule& rule) {
  std::vector<SampledRule> s(m.n_el());
  for (int e = 0; e < m.n_el(); ++e) s[e] = sample_rule(m, e, rule);
  return s;
}

// marks special elements of one collocation point; -1 elsewhere
struct SpecialIndex {
  std::vector<int> slot;
  explicit SpecialIndex(int n_el) : slot(n_el, -1) {}
  void set(const HybridRules& h) {
    for (size_t k = 0; k < h.special.size(); ++k) slot[h.special[k].elem] = static_cast<int>(k);
  }
  void clear(const HybridRules& h) {
    for (const auto& r : h.special) slot[r.elem] = -1;
  }
};

}  // namespace

const char* to_string(FreeTerm f) { return f == FreeTerm::Smooth ? "smooth" : "solid-angle"; }

FreeTerm parse_free_term(const std::string& s) {
  if (s == "smooth") return FreeTerm::Smooth;
  if (s == "solid-angle") return FreeTerm::SolidAngle;
  throw std::invalid_argument("unknown free term '" + s + "'");
}

Eigen::VectorXd BemSystem::rhs(const Eigen::VectorXd& v) const {
  Eigen::VectorXd b = N * v;
  if (!C.empty())
    for (size_t A = 0; A < C.size(); ++A) b.segment<3>(3 * A) = C[A] * b.segment<3>(3 * A);
  return b - T * v;
}

long long count_points(const SurfaceMesh& m, const SchemeConfig& cfg) {
  RuleCache cache;
  long long s = 0;
  for (const auto& c : m.colpts) s += hybrid_rules(m, c, cfg, cache).n_points(m.n_el());
  return s;
}

BemSystem assemble(const SurfaceMesh& m, const SchemeConfig& cfg, double eta, const AssemblyOptions& opt) {
  const int n_dof = 3 * m.n_no;
  BemSystem sys;
  sys.eta = eta;
  sys.N = Eigen::MatrixXd::Zero(n_dof, n_dof);
  sys.G = Eigen::MatrixXd::Zero(n_dof, n_dof);
  sys.T = Eigen::MatrixXd::Zero(n_dof, n_dof);
  RuleCache cache;
  const auto regular = sample_all(m, *cache.classical(cfg.n0));
  const double cg = -1 / (4 * pi * eta);
  const double ct = 1 / (4 * pi);
  const bool flat = m.planar;
  std::vector<long long> nqp(m.n_no, 0);
  const bool solid = opt.free_term == FreeTerm::SolidAngle && m.closed;
  if (solid) sys.C.assign(m.n_no, Mat3::Identity());

  parallel_for(m.n_no, opt.threads, [&](int A) {
    const CollocationPoint& c = m.colpts[A];
    const HybridRules h = hybrid_rules(m, c, cfg, cache);
    nqp[A] = h.n_points(m.n_el());
    SpecialIndex idx(m.n_el());
    idx.set(h);
    Eigen::Matrix<double, 3, Eigen::Dynamic> Grow = Eigen::Matrix<double, 3, Eigen::Dynamic>::Zero(3, n_dof);
    Eigen::Matrix<double, 3, Eigen::Dynamic> Trow = Grow;
    SampledRule tmp;
    std::vector<Mat3> gl, tl;
    for (int e = 0; e < m.n_el(); ++e) {
      const SampledRule* s = &regular[e];
      if (idx.slot[e] >= 0) {
        tmp = sample_rule(m, e, *h.special[idx.slot[e]].rule);
        s = &tmp;
      }
      const auto& nodes = m.elements[e].nodes;
      const int nb = static_cast<int>(nodes.size());
      gl.assign(nb, Mat3::Zero());
      tl.assign(nb, Mat3::Zero());
      for (int i = 0; i < s->size(); ++i) {
        const Vec3 r = s->x.col(i) - c.y;
        const double d = r.norm();
        if (!(d > 0)) throw std::runtime_error("quadrature point coincides with collocation point " + std::to_string(A) + " on element " + std::to_string(e));
        const Vec3 rb = r / d;
        const Mat3 rr = rb * rb.transpose();
        const Mat3 Gk = (Mat3::Identity() + rr) * (s->wJ(i) / d);
        for (int a = 0; a < nb; ++a) gl[a] += s->R(a, i) * Gk;
        if (!flat) {
          const Mat3 Tk = rr * (-6 * rb.dot(s->n.col(i)) / (d * d) * s->wJ(i));
          for (int a = 0; a < nb; ++a) tl[a] += s->R(a, i) * Tk;
        }
      }
      for (int a = 0; a < nb; ++a) {
        Grow.middleCols<3>(3 * nodes[a]) += cg * gl[a];
        if (!flat) Trow.middleCols<3>(3 * nodes[a]) += ct * tl[a];
      }
    }
    if (!Grow.allFinite() || !Trow.allFinite()) throw std::runtime_error("non-finite matrix entries in row block " + std::to_string(A));
    sys.G.middleRows<3>(3 * A) = Grow;
    sys.T.middleRows<3>(3 * A) = Trow;
    if (solid) {
      Mat3 S = Mat3::Zero();
      for (int B = 0; B < m.n_no; ++B) S += Trow.middleCols<3>(3 * B);
      sys.C[A] = 2 * Mat3::Identity() + S;
    }
    const SingularSite& own = c.sites.front();
    const auto p = m.eval(own.elem, own.xi);
    const auto& nodes = m.elements[own.elem].nodes;
    for (size_t a = 0; a < nodes.size(); ++a)
      for (int k = 0; k < 3; ++k) sys.N(3 * A + k, 3 * nodes[a] + k) += p.R(a);
  });
  for (long long v : nqp) sys.n_qp += v;
  return sys;
}

IdentityResidual identity_residuals(const SurfaceMesh& m, const CollocationPoint& c, const HybridRules& h) {
  IdentityResidual out;
  out.n_qp = h.n_points(m.n_el());
  SpecialIndex idx(m.n_el());
  idx.set(h);
  Vec3 sl = Vec3::Zero();
  Mat3 dl = Mat3::Zero();
  for (int e = 0; e < m.n_el(); ++e) {
    const QuadRule& r = idx.slot[e] >= 0 ? *h.special[idx.slot[e]].rule : *h.regular;
    const SampledRule s = sample_rule(m, e, r);
    for (int i = 0; i < s.size(); ++i) {
      const Vec3 rv = s.x.col(i) - c.y;
      const Vec3 n = s.n.col(i);
      sl += stokeslet<double>(rv) * n * s.wJ(i);
      if (!m.planar) dl += tn_contraction<double>(rv, n) * s.wJ(i);
    }
  }
  out.e_sl = sl.norm();
  out.e_dl = (dl / (4 * pi) + Mat3::Identity()).norm();
  return out;
}

IdentitySummary identity_study(const SurfaceMesh& m, const SchemeConfig& cfg, int threads) {
  RuleCache cache;
  IdentitySummary out;
  out.per_point.resize(m.n_no);
  const auto regular = sample_all(m, *cache.classical(cfg.n0));
  parallel_for(m.n_no, threads, [&](int A) {
    const CollocationPoint& c = m.colpts[A];
    const HybridRules h = hybrid_rules(m, c, cfg, cache);
    SpecialIndex idx(m.n_el());
    idx.set(h);
    IdentityResidual res;
    res.n_qp = h.n_points(m.n_el());
    Vec3 sl = Vec3::Zero();
    Mat3 dl = Mat3::Zero();
    SampledRule tmp;
    for (int e = 0; e < m.n_el(); ++e) {
      const SampledRule* s = &regular[e];
      if (idx.slot[e] >= 0) {
        tmp = sample_rule(m, e, *h.special[idx.slot[e]].rule);
        s = &tmp;
      }
      for (int i = 0; i < s->size(); ++i) {
        const Vec3 rv = s->x.col(i) - c.y;
        const double d = rv.norm();
        const Vec3 rb = rv / d;
        const Vec3 n = s->n.col(i);
        sl += (n + rb * rb.dot(n)) * (s->wJ(i) / d);
        if (!m.planar) dl += (rb * rb.transpose()) * (-6 * rb.dot(n) / (d * d) * s->wJ(i));
      }
    }
    res.e_sl = sl.norm();
    res.e_dl = (dl / (4 * pi) + Mat3::Identity()).norm();
    out.per_point[A] = res;
  });
  for (const auto& r : out.per_point) {
    out.mean_sl += r.e_sl;
    out.mean_dl += r.e_dl;
    out.n_qp += r.n_qp;
  }
  out.mean_sl /= m.n_no;
  out.mean_dl /= m.n_no;
  return out;
}

namespace {

// 3x3 diagonal-block inverse of the system matrix
class BlockJacobi {
 public:
  using StorageIndex = Eigen::Index;
  enum { ColsAtCompileTime = Eigen::Dynamic, MaxColsAtCompileTime = Eigen::Dynamic };

  BlockJacobi() = default;
  template <typename M>
  explicit BlockJacobi(const M& A) {
    compute(A);
  }
  template <typename M>
  BlockJacobi& analyzePattern(const M&) {
    return *this;
  }
  template <typename M>
  BlockJacobi& factorize(const M& A) {
    return compute(A);
  }
  template <typename M>
  BlockJacobi& compute(const M& A) {
    const Eigen::Index nb = A.rows() / 3;
    inv_.resize(nb);
    for (Eigen::Index b = 0; b < nb; ++b) {
      Mat3 D;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) D(i, j) = A.coeff(3 * b + i, 3 * b + j);
      Eigen::FullPivLU<Mat3> lu(D);
      inv_[b] = lu.isInvertible() ? Mat3(lu.inverse()) : Mat3::Identity();
    }
    return *this;
  }
  template <typename Rhs>
  Eigen::VectorXd solve(const Eigen::MatrixBase<Rhs>& b) const {
    Eigen::VectorXd x(b.rows());
    for (size_t k = 0; k < inv_.size(); ++k) x.segment<3>(3 * k) = inv_[k] * b.derived().template segment<3>(3 * k);
    return x;
  }
  Eigen::ComputationInfo info() const { return Eigen::Success; }

 private:
  std::vector<Mat3> inv_;
};

}  // namespace

SurfaceField solve_dirichlet(const BemSystem& sys, const SurfaceField& v, Solver solver, SolveInfo* info, int max_iterations) {
  const Eigen::VectorXd rhs = sys.rhs(v);
  if (solver == Solver::LU) {
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(sys.G);
    const double scale = sys.G.cwiseAbs().maxCoeff();
    const double piv = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
    if (!(piv > 1e-14 * scale)) throw SolverError("single-layer matrix is numerically singular; try --solver gmres");
    Eigen::VectorXd t = lu.solve(rhs);
    if (info) info->residual = (sys.G * t - rhs).norm() / rhs.norm();
    return t;
  }
  Eigen::GMRES<Eigen::MatrixXd, BlockJacobi> gmres;
  gmres.set_restart(50);
  gmres.setTolerance(1e-10);
  gmres.setMaxIterations(max_iterations > 0 ? max_iterations : 20 * sys.n_dof());
  gmres.compute(sys.G);
  Eigen::VectorXd t = gmres.solve(rhs);
  if (info) {
    info->iterations = static_cast<int>(gmres.iterations());
    info->residual = (sys.G * t - rhs).norm() / rhs.norm();
  }
  if (gmres.info() != Eigen::Success) throw SolverError("gmres did not converge");
  return t;
}

Vec3 field_at(const SurfaceMesh& m, const SurfaceField& f, int elem, const Vec2& xi) {
  const auto p = m.eval(elem, xi);
  Vec3 out = Vec3::Zero();
  const auto& nodes = m.elements[elem].nodes;
  for (size_t a = 0; a < nodes.size(); ++a) out += p.R(a) * f.segment<3>(3 * nodes[a]);
  return out;
}

SurfaceField nodal_field(const SurfaceMesh& m, const std::function<Vec3(const Vec3&)>& f) {
  SurfaceField v(3 * m.n_no);
  for (int A = 0; A < m.n_no; ++A) v.segment<3>(3 * A) = f(m.node_pos[A]);
  return v;
}

namespace {

double max_element_diameter(const SurfaceMesh& m) {
  double d = 0;
  for (const auto& el : m.elements)
    for (int a = 0; a < 4; ++a)
      for (int b = a + 1; b < 4; ++b) d = std::max(d, (m.vertex_pos[el.verts[a]] - m.vertex_pos[el.verts[b]]).norm());
  return d;
}

template <typename F>
void over_surface(const SurfaceMesh& m, const SurfaceField& v, const SurfaceField& t, int n, const Vec3& y, F&& f) {
  const QuadRule rule = classical_gl_2d(n);
  double dmin = std::numeric_limits<double>::infinity();
  std::vector<SampledRule> s(m.n_el());
  for (int e = 0; e < m.n_el(); ++e) {
    s[e] = sample_rule(m, e, rule);
    for (int i = 0; i < s[e].size(); ++i) dmin = std::min(dmin, (s[e].x.col(i) - y).norm());
  }
  if (dmin <= 0.5 * max_element_diameter(m)) throw NearFieldError("evaluation point closer to the surface than half an element diameter");
  for (int e = 0; e < m.n_el(); ++e) {
    const auto& nodes = m.elements[e].nodes;
    for (int i = 0; i < s[e].size(); ++i) {
      Vec3 vi = Vec3::Zero(), ti = Vec3::Zero();
      for (size_t a = 0; a < nodes.size(); ++a) {
        vi += s[e].R(a, i) * v.segment<3>(3 * nodes[a]);
        ti += s[e].R(a, i) * t.segment<3>(3 * nodes[a]);
      }
      f(Vec3(s[e].x.col(i) - y), Vec3(s[e].n.col(i)), vi, ti, s[e].wJ(i));
    }
  }
}

}  // namespace

Vec3 eval_velocity(const SurfaceMesh& m, const SurfaceField& v, const SurfaceField& t, double eta, const Vec3& y, int n0) {
  Vec3 sl = Vec3::Zero(), dl = Vec3::Zero();
  over_surface(m, v, t, 2 * n0, y, [&](const Vec3& r, const Vec3& n, const Vec3& vi, const Vec3& ti, double w) {
    sl += stokeslet<double>(r) * ti * w;
    dl += tn_contraction<double>(r, n) * vi * w;
  });
  return -sl / (8 * pi * eta) + dl / (8 * pi);
}

double eval_pressure(const SurfaceMesh& m, const SurfaceField& v, const SurfaceField& t, double eta, const Vec3& y, int n0) {
  double sl = 0, dl = 0;
  over_surface(m, v, t, 2 * n0, y, [&](const Vec3& r, const Vec3& n, const Vec3& vi, const Vec3& ti, double w) {
    // pressure Stokeslet is odd and taken from y to x
    const auto k = eval_kernels<double>(Vec3(-r), kP | kPi);
    sl += k.P.dot(ti) * w;
    dl += vi.dot(k.Pi * n) * w;
  });
  return -sl / (8 * pi) + eta * dl / (8 * pi);
}

ErrorNorms error_norms(const SurfaceMesh& m, const SurfaceField& t_h, const std::function<Vec3(const Vec3&)>& exact,
                       const std::function<double(const Vec3&)>& scale, int n) {
  const QuadRule rule = classical_gl_2d(n);
  ErrorNorms out;
  double num = 0, area = 0;
  for (int e = 0; e < m.n_el(); ++e) {
    const SampledRule s = sample_rule(m, e, rule);
    const auto& nodes = m.elements[e].nodes;
    for (int i = 0; i < s.size(); ++i) {
      Vec3 th = Vec3::Zero();
      for (size_t a = 0; a < nodes.size(); ++a) th += s.R(a, i) * t_h.segment<3>(3 * nodes[a]);
      const Vec3 x = s.x.col(i);
      const double err = (th - exact(x)).norm() / scale(x);
      out.max = std::max(out.max, err);
      out.max_traction = std::max(out.max_traction, th.norm());
      out.max_normal = std::max(out.max_normal, std::abs(th.dot(s.n.col(i))));
      num += err * err * s.wJ(i);
      area += s.wJ(i);
    }
  }
  out.l2 = std::sqrt(num / area);
  return out;
}

void export_matrix(const std::string& path, const Eigen::MatrixXd& M) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path);
  std::uint64_t n = static_cast<std::uint64_t>(M.rows());
  n = to_little(n);
  os.write(reinterpret_cast<const char*>(&n), sizeof n);
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> R = M;
  os.write(reinterpret_cast<const char*>(R.data()), static_cast<std::streamsize>(R.size() * sizeof(double)));
}

Eigen::MatrixXd import_matrix(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  std::uint64_t n = 0;
  is.read(reinterpret_cast<char*>(&n), sizeof n);
  n = to_little(n);
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> R(n, n);
  is.read(reinterpret_cast<char*>(R.data()), static_cast<std::streamsize>(R.size() * sizeof(double)));
  if (!is) throw std::runtime_error("truncated matrix file " + path);
  return R;
}

}  // namespace sbem
