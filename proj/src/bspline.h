#pragma once
#include <Eigen/Dense>
#include <vector>

namespace profit {

// B-spline basis on equally spaced knots extended beyond the domain
// (Eilers-Marx construction). With this knot layout, coefficient
// sequences that are polynomial in the knot index reproduce the same
// polynomial in x, so difference penalties have the expected null space.
class BSplineBasis {
 public:
  // nbasis basis functions of the given degree on [lo, hi].
  BSplineBasis(double lo, double hi, int nbasis, int degree = 3);

  int size() const { return nbasis_; }
  int degree() const { return degree_; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }

  // Non-zero basis values at x (degree+1 of them starting at firstIndex).
  // x is clamped to [lo, hi].
  void evalNonzero(double x, int& first_index, double* values) const;

  // Dense design matrix, one row per evaluation point.
  Eigen::MatrixXd design(const Eigen::VectorXd& x) const;

  // P = D'D for the difference penalty of the given order.
  Eigen::MatrixXd differencePenalty(int order = 2) const;

 private:
  double lo_, hi_, step_;
  int nbasis_, degree_;
  std::vector<double> knots_;  // length nbasis + degree + 1
};

}  // namespace profit
