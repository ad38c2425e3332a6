#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace sbem {

struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

struct RefinementError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

template <typename Scalar>
struct KnotVector {
  int p = 0;
  std::vector<Scalar> knots;

  KnotVector() = default;
  KnotVector(int degree, std::vector<Scalar> k) : p(degree), knots(std::move(k)) {}

  int n_basis() const { return static_cast<int>(knots.size()) - p - 1; }
  Scalar front() const { return knots.front(); }
  Scalar back() const { return knots.back(); }

  // last index i with knots[i] <= u < knots[i+1]; u == back() maps to the last nonempty span
  int find_span(Scalar u) const {
    if (u < front() || u > back()) throw DomainError("parameter outside knot range");
    const int n = n_basis();
    if (u >= knots[n]) {
      int i = n - 1;
      while (i > p && knots[i] == knots[i + 1]) --i;
      return i;
    }
    auto it = std::upper_bound(knots.begin() + p, knots.begin() + n + 1, u);
    return static_cast<int>(it - knots.begin()) - 1;
  }

  int multiplicity(Scalar u) const {
    return static_cast<int>(std::count(knots.begin(), knots.end(), u));
  }

  // spans with nonzero length, as indices i of [knots[i], knots[i+1])
  std::vector<int> nonempty_spans() const {
    std::vector<int> s;
    for (int i = p; i < n_basis(); ++i)
      if (knots[i] < knots[i + 1]) s.push_back(i);
    return s;
  }

  bool is_open() const {
    if (static_cast<int>(knots.size()) < 2 * (p + 1)) return false;
    for (int i = 0; i <= p; ++i)
      if (knots[i] != knots[0] || knots[knots.size() - 1 - i] != knots.back()) return false;
    return knots[p + 1] != knots[0] && knots[knots.size() - p - 2] != knots.back();
  }
};

using KnotVectord = KnotVector<double>;

// uniform open knot vector on [0, n_spans] (or [a, b] scaled)
template <typename Scalar = double>
KnotVector<Scalar> uniform_open(int p, int n_spans, Scalar a = 0, Scalar b = 1) {
  std::vector<Scalar> k;
  for (int i = 0; i < p; ++i) k.push_back(a);
  for (int i = 0; i <= n_spans; ++i) k.push_back(a + (b - a) * Scalar(i) / Scalar(n_spans));
  for (int i = 0; i < p; ++i) k.push_back(b);
  return {p, k};
}

template <typename Scalar>
struct BasisValues {
  int span = 0;
  // ders(k, j): k-th derivative of basis span-p+j
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> ders;

  auto values() const { return ders.row(0); }
  auto derivatives() const { return ders.row(1); }
  int first() const { return span - static_cast<int>(ders.cols()) + 1; }
};

// Cox-de Boor with derivatives on a fixed span; u may lie outside the span (polynomial extension)
template <typename Scalar>
BasisValues<Scalar> eval_basis_span(const KnotVector<Scalar>& kv, int span, Scalar u, int nd = 1) {
  const int p = kv.p;
  const auto& U = kv.knots;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Mat ndu(p + 1, p + 1), a(2, p + 1);
  std::vector<Scalar> left(p + 1), right(p + 1);
  ndu(0, 0) = 1;
  for (int j = 1; j <= p; ++j) {
    left[j] = u - U[span + 1 - j];
    right[j] = U[span + j] - u;
    Scalar saved = 0;
    for (int r = 0; r < j; ++r) {
      ndu(j, r) = right[r + 1] + left[j - r];
      Scalar temp = ndu(r, j - 1) / ndu(j, r);
      ndu(r, j) = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    ndu(j, j) = saved;
  }
  BasisValues<Scalar> out;
  out.span = span;
  out.ders = Mat::Zero(nd + 1, p + 1);
  for (int j = 0; j <= p; ++j) out.ders(0, j) = ndu(j, p);
  for (int r = 0; r <= p; ++r) {
    int s1 = 0, s2 = 1;
    a(0, 0) = 1;
    for (int k = 1; k <= std::min(nd, p); ++k) {
      Scalar d = 0;
      int rk = r - k, pk = p - k;
      if (r >= k) {
        a(s2, 0) = a(s1, 0) / ndu(pk + 1, rk);
        d = a(s2, 0) * ndu(rk, pk);
      }
      int j1 = rk >= -1 ? 1 : -rk;
      int j2 = (r - 1 <= pk) ? k - 1 : p - r;
      for (int j = j1; j <= j2; ++j) {
        a(s2, j) = (a(s1, j) - a(s1, j - 1)) / ndu(pk + 1, rk + j);
        d += a(s2, j) * ndu(rk + j, pk);
      }
      if (r <= pk) {
        a(s2, k) = -a(s1, k - 1) / ndu(pk + 1, r);
        d += a(s2, k) * ndu(r, pk);
      }
      out.ders(k, r) = d;
      std::swap(s1, s2);
    }
  }
  Scalar f = p;
  for (int k = 1; k <= std::min(nd, p); ++k) {
    out.ders.row(k) *= f;
    f *= Scalar(p - k);
  }
  return out;
}

template <typename Scalar>
BasisValues<Scalar> eval_basis(const KnotVector<Scalar>& kv, Scalar u, int nd = 1) {
  return eval_basis_span(kv, kv.find_span(u), u, nd);
}

template <typename Scalar>
std::vector<Scalar> greville_abscissae(const KnotVector<Scalar>& kv) {
  std::vector<Scalar> g(kv.n_basis());
  for (int i = 0; i < kv.n_basis(); ++i) {
    if (kv.p == 0) {
      g[i] = (kv.knots[i] + kv.knots[i + 1]) / 2;
      continue;
    }
    Scalar s = 0;
    for (int k = 1; k <= kv.p; ++k) s += kv.knots[i + k];
    g[i] = s / Scalar(kv.p);
  }
  return g;
}

// homogeneous control points (w*x, w*y, w*z, w), one column each
template <typename Scalar>
using HomogeneousNet = Eigen::Matrix<Scalar, 4, Eigen::Dynamic>;

// single knot insertion on a curve given in homogeneous coordinates
template <typename Scalar>
void insert_knot(KnotVector<Scalar>& kv, HomogeneousNet<Scalar>& P, Scalar u) {
  const int p = kv.p;
  if (!(u > kv.front() && u < kv.back())) throw DomainError("knot outside open interval");
  const int s = kv.multiplicity(u);
  if (s + 1 > p) throw RefinementError("knot multiplicity would exceed degree");
  const int k = kv.find_span(u);
  const int n = kv.n_basis();
  HomogeneousNet<Scalar> Q(4, n + 1);
  for (int i = 0; i <= k - p; ++i) Q.col(i) = P.col(i);
  for (int i = k - s; i < n; ++i) Q.col(i + 1) = P.col(i);
  for (int i = k - p + 1; i <= k - s; ++i) {
    Scalar alpha = (u - kv.knots[i]) / (kv.knots[i + p] - kv.knots[i]);
    Q.col(i) = alpha * P.col(i) + (1 - alpha) * P.col(i - 1);
  }
  kv.knots.insert(kv.knots.begin() + k + 1, u);
  P = std::move(Q);
}

}  // namespace sbem
