#include "sbem/bem.hpp"
#include "sbem/studies.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>

using namespace sbem;
constexpr double pi = std::numbers::pi;

namespace {

const SurfaceMesh& sphere2() {
  static const SurfaceMesh m = build_six_patch_sphere(2, 1);
  return m;
}

const BemSystem& sphere2_dgr() {
  static const BemSystem s = assemble(sphere2(), {Scheme::DGr, 3, DgwMode::Table}, 1.0);
  return s;
}

}  // namespace

TEST_CASE("interpolation matrix rows are partitions of unity") {
  const BemSystem& s = sphere2_dgr();
  const SurfaceMesh& m = sphere2();
  CHECK(s.n_dof() == 3 * m.n_no);
  Eigen::VectorXd x(3 * m.n_no);
  for (int A = 0; A < m.n_no; ++A) x.segment<3>(3 * A) = m.node_pos[A];
  const Eigen::VectorXd y = s.N * x;
  for (const auto& c : m.colpts) CHECK((y.segment<3>(3 * c.index) - c.y).norm() < 1e-13);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(s.n_dof());
  CHECK((s.N * ones - ones).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("double-layer matrix vanishes on a flat sheet") {
  const SurfaceMesh m = build_sheet(3, 3, 1.0);
  const BemSystem s = assemble(m, {Scheme::DG, 3, DgwMode::Table}, 1.0);
  CHECK(s.T.cwiseAbs().maxCoeff() == 0.0);
  CHECK(s.C.empty());
  CHECK(s.G.allFinite());
}

TEST_CASE("solid-angle free term maps rigid translations to twice themselves") {
  const BemSystem& s = sphere2_dgr();
  const Eigen::VectorXd v = nodal_field(sphere2(), [](const Vec3&) { return Vec3(0.3, -1.0, 2.0); });
  CHECK((s.rhs(v) - 2 * v).cwiseAbs().maxCoeff() < 1e-12);
  // smooth points carry a free term close to the identity
  for (const auto& c : sphere2().colpts)
    if (c.type == ColType::M) CHECK((s.C[c.index] - Mat3::Identity()).norm() < 1e-3);
}

TEST_CASE("smooth free term has no blocks") {
  AssemblyOptions o;
  o.free_term = FreeTerm::Smooth;
  const BemSystem s = assemble(build_six_patch_sphere(1, 1), {Scheme::DG, 3, DgwMode::Table}, 1.0, o);
  CHECK(s.C.empty());
  const Eigen::VectorXd v = Eigen::VectorXd::Random(s.n_dof());
  CHECK((s.rhs(v) - (s.N * v - s.T * v)).norm() < 1e-12);
}

TEST_CASE("threaded assembly is deterministic") {
  const SurfaceMesh m = build_six_patch_sphere(1, 1);
  AssemblyOptions o;
  o.threads = 3;
  const BemSystem a = assemble(m, {Scheme::DGw, 3, DgwMode::Table}, 2.0);
  const BemSystem b = assemble(m, {Scheme::DGw, 3, DgwMode::Table}, 2.0, o);
  CHECK((a.G - b.G).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.T - b.T).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.n_qp == b.n_qp);
}

TEST_CASE("single-layer matrix scales with the inverse viscosity") {
  const SurfaceMesh m = build_six_patch_sphere(1, 1);
  const BemSystem a = assemble(m, {Scheme::DG, 3, DgwMode::Table}, 1.0);
  const BemSystem b = assemble(m, {Scheme::DG, 3, DgwMode::Table}, 4.0);
  CHECK((a.G - 4 * b.G).norm() < 1e-13 * a.G.norm());
  CHECK((a.T - b.T).norm() == 0.0);
}

TEST_CASE("translating sphere: traction, drag and far field") {
  const SurfaceMesh& m = sphere2();
  const BemSystem& s = sphere2_dgr();
  const Eigen::VectorXd v = nodal_field(m, [](const Vec3&) { return Vec3::UnitZ(); });
  const Eigen::VectorXd t = solve_dirichlet(s, v, Solver::LU);
  const ErrorNorms e = error_norms(m, t, [](const Vec3&) { return Vec3(0, 0, -1.5); }, [](const Vec3&) { return 1.5; });
  CHECK(e.l2 < 3e-3);
  // velocity on the axis and beside the sphere at distance 2R
  CHECK(eval_velocity(m, v, t, 1.0, Vec3(0, 0, 2)).z() == doctest::Approx(0.6875).epsilon(1e-3));
  CHECK(eval_velocity(m, v, t, 1.0, Vec3(2, 0, 0)).z() == doctest::Approx(0.40625).epsilon(1e-3));
  CHECK(eval_pressure(m, v, t, 1.0, Vec3(0, 0, 2)) == doctest::Approx(0.375).epsilon(1e-3));
  CHECK(eval_pressure(m, v, t, 1.0, Vec3(0, 0, -2)) == doctest::Approx(-0.375).epsilon(1e-3));
  CHECK_THROWS_AS(eval_velocity(m, v, t, 1.0, Vec3(0, 0, 1.01)), NearFieldError);
}

TEST_CASE("rotating sphere: torque and normal traction") {
  const SurfaceMesh& m = sphere2();
  SolveParams sp;
  sp.problem = Problem::Rotating;
  sp.omega = 2;
  const Eigen::VectorXd v = boundary_velocity(sp, m);
  const Eigen::VectorXd t = solve_dirichlet(sphere2_dgr(), v, Solver::LU);
  const SolveRow r = evaluate_solution(sp, m, v, t, 3);
  CHECK(r.e_l2 < 3e-3);
  CHECK(r.drag == doctest::Approx(-16 * pi).epsilon(1e-3));
  CHECK(r.tn_max / 6 < 2e-2);
  CHECK(r.t_max == doctest::Approx(6).epsilon(2e-2));
  // the disturbance of a rotating sphere is (R/|y|)^3 omega x y
  const Vec3 y(1.2, 1.5, 0.4);
  CHECK((eval_velocity(m, v, t, 1.0, y) - 2 * Vec3::UnitZ().cross(y) / std::pow(y.norm(), 3)).norm() < 2e-3);
}

TEST_CASE("GMRES agrees with LU") {
  const BemSystem& s = sphere2_dgr();
  const Eigen::VectorXd v = nodal_field(sphere2(), [](const Vec3& x) { return Vec3(x.y(), -x.x(), 0.5); });
  SolveInfo info;
  const Eigen::VectorXd a = solve_dirichlet(s, v, Solver::LU);
  const Eigen::VectorXd b = solve_dirichlet(s, v, Solver::GMRES, &info);
  CHECK((a - b).norm() < 1e-8 * a.norm());
  CHECK(info.iterations > 0);
}

TEST_CASE("singular systems raise SolverError") {
  BemSystem s;
  s.N = Eigen::MatrixXd::Identity(6, 6);
  s.T = Eigen::MatrixXd::Zero(6, 6);
  s.G = Eigen::MatrixXd::Zero(6, 6);
  s.G(0, 0) = 1;
  CHECK_THROWS_AS(solve_dirichlet(s, Eigen::VectorXd::Ones(6), Solver::LU), SolverError);
}

TEST_CASE("identity residuals") {
  const IdentitySummary r = identity_study(sphere2(), {Scheme::DGr, 8, DgwMode::Table});
  CHECK(r.mean_sl < 1e-12);
  double worst_m = 0;
  for (const auto& c : sphere2().colpts)
    if (c.type == ColType::M) worst_m = std::max(worst_m, r.per_point[c.index].e_dl);
  CHECK(worst_m < 1e-10);
  const IdentitySummary g = identity_study(sphere2(), {Scheme::G, 3, DgwMode::Table});
  CHECK(g.mean_sl > 100 * r.mean_sl);
  CHECK(g.n_qp == count_points(sphere2(), {Scheme::G, 3, DgwMode::Table}));
}

TEST_CASE("matrix export round trip") {
  const auto path = std::filesystem::temp_directory_path() / "sbem_export_test.bin";
  Eigen::MatrixXd M(3, 3);
  M << 1, 2, 3, 4, 5, 6, 7, 8, -9.5;
  export_matrix(path.string(), M);
  CHECK(std::filesystem::file_size(path) == 8 + 9 * 8);
  std::ifstream in(path, std::ios::binary);
  unsigned char h[8];
  in.read(reinterpret_cast<char*>(h), 8);
  double first = 0, second = 0;
  in.read(reinterpret_cast<char*>(&first), 8);
  in.read(reinterpret_cast<char*>(&second), 8);
  CHECK(h[0] == 3);
  for (int k = 1; k < 8; ++k) CHECK(h[k] == 0);
  CHECK(first == 1.0);
  CHECK(second == 2.0);  // row-major
  in.close();
  CHECK(import_matrix(path.string()) == M);
  std::filesystem::remove(path);
  CHECK_THROWS(import_matrix(path.string()));
}

TEST_CASE("nodal fields and surface evaluation") {
  const SurfaceMesh& m = sphere2();
  const Eigen::VectorXd f = nodal_field(m, [](const Vec3& x) { return Vec3(2 * x.x(), x.y() - x.z(), 1); });
  for (int e = 0; e < m.n_el(); e += 11) {
    const Vec3 x = m.position(e, Vec2(0.3, 0.6));
    CHECK((field_at(m, f, e, Vec2(0.3, 0.6)) - Vec3(2 * x.x(), x.y() - x.z(), 1)).norm() < 1e-13);
  }
}
