#pragma once

// Matrices of jets, plus the small dense helpers shared by the geometry code.

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "kahred/jet.hpp"

namespace kahred {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

class JetMatrix {
 public:
  JetMatrix() = default;
  JetMatrix(int rows, int cols, int nvars, int order);

  static JetMatrix constant(const Mat& m, int nvars, int order);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int nvars() const { return a_.empty() ? 0 : a_[0].nvars(); }
  int order() const { return a_.empty() ? 0 : a_[0].order(); }

  Jet& operator()(int i, int j) { return a_[static_cast<std::size_t>(i * cols_ + j)]; }
  const Jet& operator()(int i, int j) const { return a_[static_cast<std::size_t>(i * cols_ + j)]; }

  Mat value() const;
  JetMatrix derivative(int var) const;
  JetMatrix truncated(int order) const;
  JetMatrix transpose() const;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<Jet> a_;
};

JetMatrix operator*(const JetMatrix& a, const JetMatrix& b);
JetMatrix operator+(const JetMatrix& a, const JetMatrix& b);
JetMatrix operator-(const JetMatrix& a, const JetMatrix& b);
JetMatrix operator*(const JetMatrix& a, const Jet& s);
JetMatrix operator*(const JetMatrix& a, double s);
JetMatrix operator*(const Mat& a, const JetMatrix& b);
JetMatrix operator*(const JetMatrix& a, const Mat& b);

std::vector<Jet> operator*(const JetMatrix& a, std::span<const Jet> v);

/// Determinant by elimination, pivoting on constant terms.
Jet det(const JetMatrix& m);
JetMatrix inverse(const JetMatrix& m);

/// Entry-wise composition with inner jets (see compose in jet.hpp).
JetMatrix compose(const JetMatrix& outer, std::span<const Jet> inner, std::span<const double> base);

Vec values(std::span<const Jet> v);
std::vector<Jet> truncated(std::span<const Jet> v, int order);
std::vector<Jet> derivative(std::span<const Jet> v, int var);
std::vector<Jet> compose(std::span<const Jet> outer, std::span<const Jet> inner,
                         std::span<const double> base);
Jet dot(std::span<const Jet> a, std::span<const Jet> b);

/// Gram-Schmidt in the inner product `g`, fixed processing order. Vectors whose
/// residual norm falls below `drop` are skipped; returns orthonormal columns.
Mat gram_schmidt(const Mat& candidates, const Mat& g, double drop = 1e-9);

/// g-orthogonal projector onto the column span of `basis`.
Mat orthogonal_projector(const Mat& basis, const Mat& g);

/// Max absolute entry, 0 for an empty matrix.
template <class Derived>
double max_abs(const Eigen::MatrixBase<Derived>& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

}  // namespace kahred
