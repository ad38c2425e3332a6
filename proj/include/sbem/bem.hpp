#pragma once

#include "sbem/geometry.hpp"
#include "sbem/quadrature.hpp"

#include <Eigen/Dense>

#include <functional>
#include <stdexcept>
#include <string>

namespace sbem {

// nodal 3-vectors, node-major: entries 3A..3A+2 belong to node A
using SurfaceField = Eigen::VectorXd;

enum class FreeTerm { Smooth, SolidAngle };

const char* to_string(FreeTerm f);
FreeTerm parse_free_term(const std::string& s);

struct BemSystem {
  Eigen::MatrixXd N, G, T;
  // per-row free-term blocks multiplying N; empty means identity
  std::vector<Mat3> C;
  double eta = 1;
  long long n_qp = 0;
  int n_dof() const { return static_cast<int>(G.rows()); }
  // (C N - T) v
  Eigen::VectorXd rhs(const Eigen::VectorXd& v) const;
};

struct AssemblyOptions {
  int threads = 1;
  // SolidAngle: C_A = 2I + sum_B T_AB on closed surfaces, the exterior solid-angle tensor of the
  // discrete surface; equals I up to quadrature error at smooth points
  FreeTerm free_term = FreeTerm::SolidAngle;
};

BemSystem assemble(const SurfaceMesh& m, const SchemeConfig& cfg, double eta, const AssemblyOptions& opt = {});

struct IdentityResidual {
  double e_sl = 0, e_dl = 0;
  long long n_qp = 0;
};

// per-collocation residuals of int G n da = 0 and (1/4pi) int T n da = -I
IdentityResidual identity_residuals(const SurfaceMesh& m, const CollocationPoint& c, const HybridRules& rules);

struct IdentitySummary {
  double mean_sl = 0, mean_dl = 0;
  long long n_qp = 0;
  std::vector<IdentityResidual> per_point;
};

IdentitySummary identity_study(const SurfaceMesh& m, const SchemeConfig& cfg, int threads = 1);

// quadrature-point count sum over all (collocation, element) pairs
long long count_points(const SurfaceMesh& m, const SchemeConfig& cfg);

enum class Solver { LU, GMRES };

struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SolveInfo {
  int iterations = 0;
  double residual = 0;
};

// traction t from G t = (C N - T) v
// max_iterations bounds GMRES; 0 picks 20 n_dof
SurfaceField solve_dirichlet(const BemSystem& sys, const SurfaceField& v, Solver solver, SolveInfo* info = nullptr,
                             int max_iterations = 0);

struct NearFieldError : std::domain_error {
  using std::domain_error::domain_error;
};

Vec3 eval_velocity(const SurfaceMesh& m, const SurfaceField& v, const SurfaceField& t, double eta, const Vec3& y, int n0 = 3);
double eval_pressure(const SurfaceMesh& m, const SurfaceField& v, const SurfaceField& t, double eta, const Vec3& y, int n0 = 3);

// surface value of a nodal field
Vec3 field_at(const SurfaceMesh& m, const SurfaceField& f, int elem, const Vec2& xi);

SurfaceField nodal_field(const SurfaceMesh& m, const std::function<Vec3(const Vec3&)>& f);

struct ErrorNorms {
  double max = 0, l2 = 0;
  double max_traction = 0;  // max |t_h| over the samples
  double max_normal = 0;    // max |t_h . n| over the samples
};

// e(x) = |t_h(x) - t(x)| / scale(x), sampled with n x n GL points per element
ErrorNorms error_norms(const SurfaceMesh& m, const SurfaceField& t_h, const std::function<Vec3(const Vec3&)>& exact,
                       const std::function<double(const Vec3&)>& scale, int n = 4);

// raw row-major doubles after a little-endian u64 header holding the row count
void export_matrix(const std::string& path, const Eigen::MatrixXd& M);
Eigen::MatrixXd import_matrix(const std::string& path);

}  // namespace sbem
