#include "sbem/studies.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

using namespace sbem;

TEST_CASE("closed-form rectangle integral of 1/r") {
  const double unit = 2 * std::log(1 + std::sqrt(2.0));
  CHECK(rect_inv_r(0, 1, 0, 1) == doctest::Approx(unit).epsilon(1e-15));
  CHECK(rect_inv_r(-1, 1, -1, 1) == doctest::Approx(4 * unit).epsilon(1e-15));
  CHECK(rect_inv_r(-1, 1, 0, 2) == doctest::Approx(2 * rect_inv_r(0, 1, 0, 2)).epsilon(1e-15));
  // off-origin rectangle against a fine tensor rule
  const auto [x, w] = gauss_legendre_1d<double>(60);
  double s = 0;
  for (int i = 0; i < 60; ++i)
    for (int j = 0; j < 60; ++j) s += w(i) * w(j) / std::hypot(1.5 + 0.5 * (x(i) + 1), 0.25 + 0.25 * (x(j) + 1));
  CHECK(rect_inv_r(1.5, 2.5, 0.25, 0.75) == doctest::Approx(s * 0.5 * 0.25).epsilon(1e-13));
}

TEST_CASE("log-log slope of a power law") {
  const std::vector<double> x = {1, 2, 4, 8, 16};
  std::vector<double> y;
  for (double v : x) y.push_back(3 * std::pow(v, -1.5));
  CHECK(loglog_slope(x, y) == doctest::Approx(-1.5).epsilon(1e-14));
}

TEST_CASE("table output starts with a comment line") {
  Table t;
  t.comment = "demo run";
  t.columns = {"a", "b"};
  t.add({"1", fmt(0.5)});
  t.add({"2", fmt(0.25)});
  std::ostringstream os;
  t.write(os);
  CHECK(os.str() == "# demo run\na,b\n1,5.0000000000e-01\n2,2.5000000000e-01\n");
  CHECK(t.column("b", "a", "2") == std::vector<double>{0.25});
  CHECK(t.column("a").size() == 2);
}

TEST_CASE("enum names round trip") {
  for (Geometry g : {Geometry::Sheet, Geometry::SinglePatchSphere, Geometry::SixPatchSphere, Geometry::Ellipsoid})
    CHECK(parse_geometry(to_string(g)) == g);
  for (Problem p : {Problem::Rotating, Problem::Translating, Problem::EllipsoidRise}) CHECK(parse_problem(to_string(p)) == p);
  for (Scheme s : {Scheme::G, Scheme::DG, Scheme::DGr, Scheme::DGw}) CHECK(parse_scheme(to_string(s)) == s);
  for (FreeTerm f : {FreeTerm::Smooth, FreeTerm::SolidAngle}) CHECK(parse_free_term(to_string(f)) == f);
  CHECK(parse_scheme("dgw") == Scheme::DGw);
  CHECK_THROWS_AS(parse_geometry("torus"), std::invalid_argument);
  CHECK_THROWS_AS(parse_problem("sinking"), std::invalid_argument);
}

TEST_CASE("spheroid drag reduces to Stokes drag") {
  const double stokes = 6 * std::numbers::pi * 2.0 * 1.5 * 0.5;
  CHECK(spheroid_drag(2.0, 1.5, 0, 0.5) == doctest::Approx(stokes).epsilon(1e-15));
  for (double e : {1e-3, 0.2, 0.49})
    CHECK(spheroid_drag(2.0, 1.5, e, 0.5) == doctest::Approx(stokes * (1 - 0.4 * e * e)).epsilon(0.2 * std::pow(e, 4) + 1e-15));
  // the two evaluation branches meet
  CHECK(spheroid_drag(1, 1, 0.5 + 1e-12, 1) == doctest::Approx(spheroid_drag(1, 1, 0.5, 1)).epsilon(1e-11));
  CHECK(spheroid_drag(1, 1, 0.8, 1) < spheroid_drag(1, 1, 0.5, 1));
}

TEST_CASE("sheet geometry per level") {
  const SurfaceMesh m = build_geometry(Geometry::Sheet, 2, {});
  CHECK(m.n_el() == 64);
  CHECK(surface_area(m) == doctest::Approx(16).epsilon(1e-13));
}

TEST_CASE("hybrid sheet study on the coarsest levels") {
  const auto rows = hybrid_sheet(1, 2, {Scheme::G, Scheme::DG, Scheme::DGr, Scheme::DGw}, 3, DgwMode::Table, 2);
  REQUIRE(rows.size() == 8);
  for (int l = 0; l < 2; ++l) {
    const SheetRow* r = &rows[4 * l];
    CHECK(r[0].e_rel_mean > r[1].e_rel_mean);
    CHECK(r[1].e_rel_mean > r[2].e_rel_mean);
    CHECK(r[2].e_rel_mean > r[3].e_rel_mean);
    CHECK(r[1].n_qp == r[3].n_qp);
  }
  CHECK(rows[4].e_abs_tot / rows[0].e_abs_tot == doctest::Approx(0.5).epsilon(1e-3));
  const Table t = hybrid_sheet_table(rows, 3);
  CHECK(t.rows.size() == 8);
  CHECK(t.columns.front() == "level");
}

TEST_CASE("adjusted weights by fitting match the table on the sheet") {
  const auto table = hybrid_sheet(1, 1, {Scheme::DGw}, 3, DgwMode::Table, 1);
  const auto fit = hybrid_sheet(1, 1, {Scheme::DGw}, 3, DgwMode::Fit, 1);
  CHECK(table[0].e_rel_mean == doctest::Approx(fit[0].e_rel_mean).epsilon(1e-6));
}

TEST_CASE("ellipsoid study runs against its own reference") {
  SolveParams sp;
  sp.problem = Problem::EllipsoidRise;
  sp.geometry = Geometry::Ellipsoid;
  sp.gp.a = 1;
  sp.gp.ecc = 0.5;
  sp.ref_level = 2;
  sp.ref_n0 = 3;
  const SolveOutput o = solve_study(sp, 1, 2, {Scheme::DGr}, {3}, DgwMode::Table);
  REQUIRE(o.rows.size() == 2);
  CHECK(o.rows[1].e_l2 < 1e-12);  // same discretization as the reference
  CHECK(o.rows[0].e_l2 < 5e-2);
  CHECK(o.rows[1].drag == doctest::Approx(o.rows[1].drag_exact).epsilon(5e-3));
  sp.geometry = Geometry::SixPatchSphere;
  CHECK_THROWS_AS(solve_study(sp, 1, 1, {Scheme::DGr}, {3}, DgwMode::Table), std::invalid_argument);
}
