#pragma once

#include "sbem/splines.hpp"

#include <Eigen/Dense>

#include <array>
#include <string>
#include <vector>

namespace sbem {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// rational shape functions and surface derivatives at one parameter point of a span
struct SpanEval {
  Vec3 x, xu, xv;
  Eigen::VectorXd R, Ru, Rv;  // local index a + (p+1)*b
};

struct NurbsPatch {
  KnotVectord U, V;
  Eigen::Matrix4Xd cps;  // columns (x, y, z, w), index i + nu*j

  int p() const { return U.p; }
  int q() const { return V.p; }
  int nu() const { return U.n_basis(); }
  int nv() const { return V.n_basis(); }
  int index(int i, int j) const { return i + nu() * j; }

  SpanEval eval_span(int iu, int iv, double u, double v) const;
  SpanEval eval(double u, double v) const { return eval_span(U.find_span(u), V.find_span(v), u, v); }

  void insert_knot_u(double u);
  void insert_knot_v(double v);
  void bisect_spans();  // halves every nonempty span in both directions
};

enum class Loc { Corner, Edge, Center, Pole };
enum class ColType { C, E, M, Pole, PatchEdge, PatchCorner };

const char* to_string(Loc l);
const char* to_string(ColType t);

struct Element {
  int patch = 0, iu = 0, iv = 0;
  double u0 = 0, u1 = 0, v0 = 0, v1 = 0;
  std::vector<int> nodes;            // global node of each local basis function
  std::array<int, 4> verts{};        // corners (-1,-1), (1,-1), (1,1), (-1,1)
  std::array<bool, 4> degenerate{};  // edge k joins verts k and k+1
  bool touches_pole() const { return degenerate[0] || degenerate[1] || degenerate[2] || degenerate[3]; }
};

struct SurfaceFrame {
  Vec3 x, a1, a2, n;
  double J = 0;
  bool degenerate = false;
};

struct ElementPoint : SurfaceFrame {
  Eigen::VectorXd R;
};

struct SingularSite {
  int elem = 0;
  Vec2 xi;  // collocation point in the element's master coordinates
  Loc loc = Loc::Center;
};

struct CollocationPoint {
  int index = 0;
  Vec3 y;
  int patch = 0;
  Vec2 uv;
  ColType type = ColType::M;
  std::vector<SingularSite> sites;
  bool pole() const { return type == ColType::Pole; }
};

struct Classification {
  std::vector<int> singular, near;
};

struct SurfaceMesh {
  std::string name;
  std::vector<NurbsPatch> patches;
  std::vector<std::vector<int>> node_of;  // patch cp index -> global node
  std::vector<Element> elements;
  std::vector<CollocationPoint> colpts;
  std::vector<std::vector<int>> neighbors;  // vertex-sharing elements
  std::vector<Vec3> vertex_pos;
  std::vector<Vec3> node_pos;  // control point of each global node
  int n_no = 0;
  bool planar = false;
  bool closed = false;
  double scale = 1;  // bounding-box diagonal

  int n_el() const { return static_cast<int>(elements.size()); }
  ElementPoint eval(int e, const Vec2& xi) const;
  SurfaceFrame frame(int e, const Vec2& xi) const;
  Vec3 position(int e, const Vec2& xi) const;
  Classification classify(const CollocationPoint& c) const;
  bool shares_vertex(int e, int f) const;
};

// uniform flat biquadratic sheet of nx*ny square elements of side L, centered at the origin, normal +z
SurfaceMesh build_sheet(int nx, int ny, double L);
SurfaceMesh build_single_patch_sphere(int level, double R);
SurfaceMesh build_six_patch_sphere(int level, double R);
SurfaceMesh build_ellipsoid(int level, double a, double ecc);

// numbering, elements, adjacency and collocation points from a list of patches
SurfaceMesh assemble_mesh(std::vector<NurbsPatch> patches, bool closed, std::string name);

double surface_area(const SurfaceMesh& m, int n = 8);
double enclosed_volume(const SurfaceMesh& m, int n = 8);
// sqrt(int ((|x|-R)/R)^2 da / (4 pi R^2))
double radius_error_l2(const SurfaceMesh& m, double R, int n = 6);

}  // namespace sbem
