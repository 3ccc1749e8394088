#include "kahred/linalg.hpp"

#include <cmath>
#include <utility>

#include "kahred/errors.hpp"

namespace kahred {

JetMatrix::JetMatrix(int rows, int cols, int nvars, int order)
    : rows_(rows), cols_(cols), a_(static_cast<std::size_t>(rows * cols), Jet(nvars, order)) {}

JetMatrix JetMatrix::constant(const Mat& m, int nvars, int order) {
  JetMatrix r(static_cast<int>(m.rows()), static_cast<int>(m.cols()), nvars, order);
  for (int i = 0; i < r.rows(); ++i)
    for (int j = 0; j < r.cols(); ++j) r(i, j).set_value(m(i, j));
  return r;
}

Mat JetMatrix::value() const {
  Mat m(rows_, cols_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) m(i, j) = (*this)(i, j).value();
  return m;
}

JetMatrix JetMatrix::derivative(int var) const {
  JetMatrix r;
  r.rows_ = rows_;
  r.cols_ = cols_;
  r.a_.reserve(a_.size());
  for (const Jet& x : a_) r.a_.push_back(x.derivative(var));
  return r;
}

JetMatrix JetMatrix::truncated(int order) const {
  JetMatrix r;
  r.rows_ = rows_;
  r.cols_ = cols_;
  r.a_.reserve(a_.size());
  for (const Jet& x : a_) r.a_.push_back(x.truncated(order));
  return r;
}

JetMatrix JetMatrix::transpose() const {
  JetMatrix r;
  r.rows_ = cols_;
  r.cols_ = rows_;
  r.a_.resize(a_.size());
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) r(j, i) = (*this)(i, j);
  return r;
}

JetMatrix operator*(const JetMatrix& a, const JetMatrix& b) {
  if (a.cols() != b.rows()) throw ConfigError("jet matrix product: shape mismatch");
  JetMatrix r(a.rows(), b.cols(), a.nvars(), a.order());
  for (int i = 0; i < a.rows(); ++i)
    for (int k = 0; k < a.cols(); ++k)
      for (int j = 0; j < b.cols(); ++j) r(i, j) += a(i, k) * b(k, j);
  return r;
}

JetMatrix operator+(const JetMatrix& a, const JetMatrix& b) {
  JetMatrix r = a;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) r(i, j) += b(i, j);
  return r;
}

JetMatrix operator-(const JetMatrix& a, const JetMatrix& b) {
  JetMatrix r = a;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) r(i, j) -= b(i, j);
  return r;
}

JetMatrix operator*(const JetMatrix& a, const Jet& s) {
  JetMatrix r = a;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) r(i, j) = a(i, j) * s;
  return r;
}

JetMatrix operator*(const JetMatrix& a, double s) {
  JetMatrix r = a;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) r(i, j) *= s;
  return r;
}

JetMatrix operator*(const Mat& a, const JetMatrix& b) {
  JetMatrix r(static_cast<int>(a.rows()), b.cols(), b.nvars(), b.order());
  for (int i = 0; i < a.rows(); ++i)
    for (int k = 0; k < a.cols(); ++k) {
      if (a(i, k) == 0.0) continue;
      for (int j = 0; j < b.cols(); ++j) r(i, j) += b(k, j) * a(i, k);
    }
  return r;
}

JetMatrix operator*(const JetMatrix& a, const Mat& b) {
  JetMatrix r(a.rows(), static_cast<int>(b.cols()), a.nvars(), a.order());
  for (int i = 0; i < a.rows(); ++i)
    for (int k = 0; k < a.cols(); ++k)
      for (int j = 0; j < b.cols(); ++j) {
        if (b(k, j) == 0.0) continue;
        r(i, j) += a(i, k) * b(k, j);
      }
  return r;
}

std::vector<Jet> operator*(const JetMatrix& a, std::span<const Jet> v) {
  if (static_cast<int>(v.size()) != a.cols()) throw ConfigError("jet matrix-vector: shape mismatch");
  std::vector<Jet> r(static_cast<std::size_t>(a.rows()), Jet(a.nvars(), a.order()));
  for (int i = 0; i < a.rows(); ++i)
    for (int k = 0; k < a.cols(); ++k) r[static_cast<std::size_t>(i)] += a(i, k) * v[static_cast<std::size_t>(k)];
  return r;
}

namespace {

// Cofactor expansion; only reached when a constant-term pivot vanishes.
Jet laplace_det(const JetMatrix& m) {
  const int n = m.rows();
  if (n == 1) return m(0, 0);
  Jet r(m.nvars(), m.order());
  for (int j = 0; j < n; ++j) {
    JetMatrix minor(n - 1, n - 1, m.nvars(), m.order());
    for (int r2 = 1; r2 < n; ++r2)
      for (int c2 = 0, cc = 0; c2 < n; ++c2) {
        if (c2 == j) continue;
        minor(r2 - 1, cc++) = m(r2, c2);
      }
    const Jet term = m(0, j) * laplace_det(minor);
    if (j % 2 == 0)
      r += term;
    else
      r -= term;
  }
  return r;
}

}  // namespace

Jet det(const JetMatrix& m) {
  if (m.rows() != m.cols()) throw ConfigError("determinant of a non-square jet matrix");
  const int n = m.rows();
  JetMatrix a = m;
  Jet d = Jet::constant(m.nvars(), m.order(), 1.0);
  for (int c = 0; c < n; ++c) {
    int piv = c;
    for (int r = c + 1; r < n; ++r)
      if (std::abs(a(r, c).value()) > std::abs(a(piv, c).value())) piv = r;
    if (a(piv, c).value() == 0.0) return laplace_det(m);
    if (piv != c) {
      for (int j = 0; j < n; ++j) std::swap(a(c, j), a(piv, j));
      d = -d;
    }
    d = d * a(c, c);
    const Jet inv = reciprocal(a(c, c));
    for (int r = c + 1; r < n; ++r) {
      const Jet f = a(r, c) * inv;
      for (int j = c + 1; j < n; ++j) a(r, j) -= f * a(c, j);
    }
  }
  return d;
}

JetMatrix inverse(const JetMatrix& m) {
  if (m.rows() != m.cols()) throw ConfigError("inverse of a non-square jet matrix");
  const int n = m.rows();
  JetMatrix a = m;
  JetMatrix inv = JetMatrix::constant(Mat::Identity(n, n), m.nvars(), m.order());
  for (int c = 0; c < n; ++c) {
    int piv = c;
    for (int r = c + 1; r < n; ++r)
      if (std::abs(a(r, c).value()) > std::abs(a(piv, c).value())) piv = r;
    if (a(piv, c).value() == 0.0) throw GeometryError("singular jet matrix");
    if (piv != c)
      for (int j = 0; j < n; ++j) {
        std::swap(a(c, j), a(piv, j));
        std::swap(inv(c, j), inv(piv, j));
      }
    const Jet p = reciprocal(a(c, c));
    for (int j = 0; j < n; ++j) {
      a(c, j) = a(c, j) * p;
      inv(c, j) = inv(c, j) * p;
    }
    for (int r = 0; r < n; ++r) {
      if (r == c) continue;
      const Jet f = a(r, c);
      for (int j = 0; j < n; ++j) {
        a(r, j) -= f * a(c, j);
        inv(r, j) -= f * inv(c, j);
      }
    }
  }
  return inv;
}

JetMatrix compose(const JetMatrix& outer, std::span<const Jet> inner, std::span<const double> base) {
  if (inner.empty()) throw ConfigError("compose: no inner jets");
  JetMatrix r(outer.rows(), outer.cols(), inner[0].nvars(), inner[0].order());
  for (int i = 0; i < outer.rows(); ++i)
    for (int j = 0; j < outer.cols(); ++j) r(i, j) = compose(outer(i, j), inner, base);
  return r;
}

Vec values(std::span<const Jet> v) {
  Vec r(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) r(static_cast<Eigen::Index>(i)) = v[i].value();
  return r;
}

std::vector<Jet> truncated(std::span<const Jet> v, int order) {
  std::vector<Jet> r;
  r.reserve(v.size());
  for (const Jet& x : v) r.push_back(x.truncated(order));
  return r;
}

std::vector<Jet> derivative(std::span<const Jet> v, int var) {
  std::vector<Jet> r;
  r.reserve(v.size());
  for (const Jet& x : v) r.push_back(x.derivative(var));
  return r;
}

std::vector<Jet> compose(std::span<const Jet> outer, std::span<const Jet> inner,
                         std::span<const double> base) {
  std::vector<Jet> r;
  r.reserve(outer.size());
  for (const Jet& x : outer) r.push_back(compose(x, inner, base));
  return r;
}

Jet dot(std::span<const Jet> a, std::span<const Jet> b) {
  if (a.size() != b.size() || a.empty()) throw ConfigError("jet dot: size mismatch");
  Jet r = a[0] * b[0];
  for (std::size_t i = 1; i < a.size(); ++i) r += a[i] * b[i];
  return r;
}

Mat gram_schmidt(const Mat& candidates, const Mat& g, double drop) {
  std::vector<Vec> kept;
  for (Eigen::Index c = 0; c < candidates.cols(); ++c) {
    Vec v = candidates.col(c);
    const double scale = std::sqrt(std::max(v.dot(g * v), 0.0));
    // two passes keep the result orthogonal to working precision
    for (int pass = 0; pass < 2; ++pass)
      for (const Vec& e : kept) v -= e.dot(g * v) * e;
    const double norm = std::sqrt(std::max(v.dot(g * v), 0.0));
    if (norm <= drop * std::max(scale, 1.0)) continue;
    kept.push_back(v / norm);
  }
  Mat r(candidates.rows(), static_cast<Eigen::Index>(kept.size()));
  for (std::size_t i = 0; i < kept.size(); ++i) r.col(static_cast<Eigen::Index>(i)) = kept[i];
  return r;
}

Mat orthogonal_projector(const Mat& basis, const Mat& g) {
  if (basis.cols() == 0) return Mat::Zero(g.rows(), g.cols());
  const Mat gram = basis.transpose() * g * basis;
  return basis * gram.ldlt().solve(basis.transpose() * g);
}


}  // namespace kahred
