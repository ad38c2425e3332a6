#pragma once

#include "sbem/gauss.hpp"
#include "sbem/geometry.hpp"

#include <Eigen/Dense>

#include <array>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

namespace sbem {

enum class RuleKind { ClassicalGL, ModifiedGL, Duffy, AdjustedTable, AdjustedFit };

const char* to_string(RuleKind k);

struct QuadRule {
  Eigen::Matrix2Xd xi;
  Eigen::VectorXd w;
  RuleKind kind = RuleKind::ClassicalGL;
  int n = 0;         // univariate density
  std::string note;  // provenance, e.g. fallback reasons

  int size() const { return static_cast<int>(w.size()); }
};

enum class Scheme { G, DG, DGr, DGw };
enum class DgwMode { Table, Fit };

const char* to_string(Scheme s);
Scheme parse_scheme(const std::string& s);

struct SchemeConfig {
  Scheme scheme = Scheme::DGr;
  int n0 = 3;
  DgwMode dgw_mode = DgwMode::Table;
};

struct UnsupportedCollocation : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct FitFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

QuadRule classical_gl_2d(int n);
QuadRule modified_gl(int p, int q, int n);
// triangle fan around xi0 (a corner, edge midpoint or the center of [-1,1]^2), n x n points per triangle
QuadRule duffy_rule(const Vec2& xi0, int n);

struct AdjustedWeightSet {
  int id = 0;
  Eigen::Vector2i offset;  // collocation point in the near element's master coordinates
  std::array<double, 9> dw{};
};

const std::array<AdjustedWeightSet, 7>& adjusted_weight_table();

// D4 element acting on master coordinates as an integer 2x2 matrix
using D4 = Eigen::Matrix2i;
const std::array<D4, 8>& d4_group();

// table set and D4 transform g with g * offset(set) == offset
std::optional<std::pair<int, D4>> match_adjusted_set(const Eigen::Vector2i& offset);
QuadRule adjusted_from_table(int set, const D4& g);

// integer lattice position of the collocation point in the master coordinates of near element `elem`
std::optional<Eigen::Vector2i> near_offset(const SurfaceMesh& m, int elem, const CollocationPoint& c);

struct FitResult {
  QuadRule rule;
  double residual = 0;  // ||A w - f||_inf / ||f||_inf
  double rcond = 0;
};

// 3x3 GL points with weights fitted to the moments of R_A / r on `elem`
FitResult moment_fit_adjusted(const SurfaceMesh& m, int elem, const Vec3& y);

class RuleCache {
 public:
  std::shared_ptr<const QuadRule> classical(int n);
  std::shared_ptr<const QuadRule> modified(int p, int q, int n);
  std::shared_ptr<const QuadRule> duffy(const Vec2& xi0, int n);
  std::shared_ptr<const QuadRule> table(int set, const D4& g);

 private:
  using Key = std::tuple<int, int, int, int, int, int>;
  std::mutex mu_;
  std::map<Key, std::shared_ptr<const QuadRule>> rules_;
  template <typename F>
  std::shared_ptr<const QuadRule> get(const Key& k, F&& make);
};

struct ElementRule {
  int elem = 0;
  std::shared_ptr<const QuadRule> rule;
};

struct HybridRules {
  std::vector<ElementRule> special;  // singular then near elements
  int n_singular = 0;
  std::shared_ptr<const QuadRule> regular;
  long long n_points(int n_el) const;
};

HybridRules hybrid_rules(const SurfaceMesh& m, const CollocationPoint& c, const SchemeConfig& cfg, RuleCache& cache);

// sum_i k(frame(xi_i)) J(xi_i) w_i
template <typename Kernel>
auto integrate(const QuadRule& rule, const SurfaceMesh& m, int elem, Kernel&& kernel) {
  using T = decltype(kernel(std::declval<const ElementPoint&>()));
  T sum = T();
  bool first = true;
  for (int i = 0; i < rule.size(); ++i) {
    const ElementPoint f = m.eval(elem, rule.xi.col(i));
    T v = kernel(f);
    if constexpr (std::is_arithmetic_v<T>) {
      if (!std::isfinite(v)) throw std::runtime_error("non-finite kernel at quadrature point " + std::to_string(i));
    } else {
      if (!v.allFinite()) throw std::runtime_error("non-finite kernel at quadrature point " + std::to_string(i));
    }
    if (first) {
      sum = v * (f.J * rule.w(i));
      first = false;
    } else {
      sum += v * (f.J * rule.w(i));
    }
  }
  return sum;
}

double min_distance(const QuadRule& rule, const SurfaceMesh& m, int elem, const Vec3& y);

// geometry of a rule mapped onto an element; wJ holds w_i J(xi_i)
struct SampledRule {
  Eigen::Matrix3Xd x, n;
  Eigen::VectorXd wJ;
  Eigen::MatrixXd R;  // shape values, one column per point
  int size() const { return static_cast<int>(wJ.size()); }
};

SampledRule sample_rule(const SurfaceMesh& m, int elem, const QuadRule& rule);

}  // namespace sbem
