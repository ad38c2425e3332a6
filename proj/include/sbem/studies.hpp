#pragma once

#include "sbem/bem.hpp"

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace sbem {

struct Table {
  std::string comment;  // one-line description, written as a comment
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void add(std::vector<std::string> row) { rows.push_back(std::move(row)); }
  void write(std::ostream& os) const;
  // column values of rows whose `key` column equals `value`
  std::vector<double> column(const std::string& name, const std::string& key = "", const std::string& value = "") const;
};

std::string fmt(double x);
std::string fmt(long long x);
inline std::string fmt(int x) { return fmt(static_cast<long long>(x)); }

// least-squares slope of log y against log x
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

// int over [x0,x1]x[y0,y1] of 1/sqrt(x^2+y^2)
double rect_inv_r(double x0, double x1, double y0, double y1);

enum class Geometry { Sheet, SinglePatchSphere, SixPatchSphere, Ellipsoid };
Geometry parse_geometry(const std::string& s);
const char* to_string(Geometry g);

struct GeometryParams {
  double radius = 1;
  double a = 1;
  double ecc = 0;
};

SurfaceMesh build_geometry(Geometry g, int level, const GeometryParams& p);

struct QuadStudyResult {
  Table table;
  double slope_classical = 0, slope_modified = 0;
  double duffy_max_err_above_200 = 0;
  std::array<double, 3> duffy_err_above_200{};  // corner, edge midpoint, center; each against its own n_qp^e
  double i_sing_err = 0, i_near_err = 0;
};

// singular-element sweeps on a flat element plus the 3x3-sheet closed-form checks
QuadStudyResult quad_study(int max_n = 1024);

Table identity_study_table(Geometry g, int l0, int l1, const std::vector<Scheme>& schemes, const std::vector<int>& n0s,
                           const GeometryParams& gp, DgwMode mode, int threads);

struct SheetRow {
  int level = 0, n_no = 0;
  Scheme scheme = Scheme::G;
  long long n_qp = 0;
  double e_abs_tot = 0, e_rel_mean = 0;
};

// biquadratic sheet of 4*2^(l-1) square elements per side, side length 4
std::vector<SheetRow> hybrid_sheet(int l0, int l1, const std::vector<Scheme>& schemes, int n0, DgwMode mode, int threads);
Table hybrid_sheet_table(const std::vector<SheetRow>& rows, int n0);

enum class Problem { Rotating, Translating, EllipsoidRise };
Problem parse_problem(const std::string& s);
const char* to_string(Problem p);

struct SolveParams {
  Problem problem = Problem::Rotating;
  Geometry geometry = Geometry::SixPatchSphere;
  GeometryParams gp;
  double eta = 1, omega = 1, vbar = 1;
  Solver solver = Solver::LU;
  int max_iterations = 0;
  FreeTerm free_term = FreeTerm::SolidAngle;
  int threads = 1;
  int ref_level = 0;  // ellipsoid self-convergence reference level, 0: one above the finest
  int ref_n0 = 8;
};

struct SolveRow {
  int level = 0, n_no = 0, n0 = 0;
  Scheme scheme = Scheme::DGr;
  long long n_qp = 0;
  double e_l2 = 0, e_max = 0;  // traction error norms, see solve_study
  double t_max = 0, tn_max = 0;
  double drag = 0, drag_exact = 0;
  Vec3 v_axis = Vec3::Zero(), v_side = Vec3::Zero();
  double p_axis = 0;
  double seconds = 0;
  int iterations = 0;
};

struct SolveOutput {
  std::vector<SolveRow> rows;
  SurfaceMesh last_mesh;
  SurfaceField last_v, last_t;
};

// rotating: t = -3 eta (omega x x)/R, errors scaled by 3 eta omega R / R;
// translating: t = -3 eta vbar/(2R) e3, errors relative to |t|;
// ellipsoid-rise: self-convergence against a DGr reference at sampled parameter points
SolveOutput solve_study(const SolveParams& sp, int l0, int l1, const std::vector<Scheme>& schemes, const std::vector<int>& n0s,
                        DgwMode mode);
SurfaceField boundary_velocity(const SolveParams& sp, const SurfaceMesh& m);
// error norms, load and field probes of one rotating or translating solution; level, scheme and n_qp are left unset
SolveRow evaluate_solution(const SolveParams& sp, const SurfaceMesh& m, const SurfaceField& v, const SurfaceField& t, int n0);
Table solve_table(const SolveParams& sp, const std::vector<SolveRow>& rows, bool timing);

// closed-form drag of a prolate spheroid translating along its axis
double spheroid_drag(double eta, double a, double ecc, double vbar);

}  // namespace sbem
