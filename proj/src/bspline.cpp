#include "bspline.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace profit {

BSplineBasis::BSplineBasis(double lo, double hi, int nbasis, int degree)
    : lo_(lo), hi_(hi), nbasis_(nbasis), degree_(degree) {
  if (hi <= lo) throw std::invalid_argument("b-spline domain empty");
  if (degree < 1) throw std::invalid_argument("b-spline degree must be >= 1");
  if (nbasis < degree + 1) throw std::invalid_argument("basis count must be >= degree + 1");
  // nbasis = (#interior segments) + degree, segments equally spaced.
  const int segments = nbasis - degree;
  step_ = (hi - lo) / segments;
  knots_.resize(static_cast<std::size_t>(nbasis + degree + 1));
  for (int i = 0; i < static_cast<int>(knots_.size()); ++i)
    knots_[static_cast<std::size_t>(i)] = lo + (i - degree) * step_;
}

void BSplineBasis::evalNonzero(double x, int& first_index, double* values) const {
  x = std::clamp(x, lo_, hi_);
  // Knot span index such that knots[span] <= x < knots[span+1].
  int span = degree_ + static_cast<int>((x - lo_) / step_);
  span = std::clamp(span, degree_, nbasis_ - 1);
  // Cox-de Boor recursion specialized to one span.
  values[0] = 1.0;
  std::array<double, 8> left{}, right{};
  for (int j = 1; j <= degree_; ++j) {
    left[static_cast<std::size_t>(j)] = x - knots_[static_cast<std::size_t>(span + 1 - j)];
    right[static_cast<std::size_t>(j)] = knots_[static_cast<std::size_t>(span + j)] - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double tmp = values[r] / (right[static_cast<std::size_t>(r + 1)] +
                                      left[static_cast<std::size_t>(j - r)]);
      values[r] = saved + right[static_cast<std::size_t>(r + 1)] * tmp;
      saved = left[static_cast<std::size_t>(j - r)] * tmp;
    }
    values[j] = saved;
  }
  first_index = span - degree_;
}

Eigen::MatrixXd BSplineBasis::design(const Eigen::VectorXd& x) const {
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(x.size(), nbasis_);
  double vals[8];
  for (int i = 0; i < x.size(); ++i) {
    int first;
    evalNonzero(x[i], first, vals);
    for (int j = 0; j <= degree_; ++j) b(i, first + j) = vals[j];
  }
  return b;
}

Eigen::MatrixXd BSplineBasis::differencePenalty(int order) const {
  if (order < 1 || order >= nbasis_) throw std::invalid_argument("bad penalty order");
  Eigen::MatrixXd d = Eigen::MatrixXd::Identity(nbasis_, nbasis_);
  for (int o = 0; o < order; ++o) {
    Eigen::MatrixXd d1 = Eigen::MatrixXd::Zero(d.rows() - 1, d.cols());
    for (int i = 0; i < d1.rows(); ++i) d1.row(i) = d.row(i + 1) - d.row(i);
    d = d1;
  }
  return d.transpose() * d;
}

}  // namespace profit
