#pragma once
#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "bspline.h"
#include "dataset.h"
#include "gcv.h"
#include "local_linear.h"  // Point2D

namespace profit {

// Penalized B-spline configuration shared by the 1-D and 2-D fits.
struct SplineConfig {
  int degree = 3;
  int nbasis = 10;        // per axis
  int penalty_order = 2;
  std::vector<double> lambda_grid;  // empty -> 13 log-spaced in [1e-4, 1e4]
  std::optional<double> fixed_lambda;

  std::vector<double> lambdaGrid() const {
    if (fixed_lambda) return {*fixed_lambda};
    return lambda_grid.empty() ? log_grid(1e-4, 1e4, 13) : lambda_grid;
  }
};

struct PSplineFit1D {
  BSplineBasis basis;
  Eigen::VectorXd coef;
  double lambda = 0.0;
  double edf = 0.0;
  GcvChoice gcv;

  double eval(double x) const;
  Eigen::VectorXd evalMany(const Eigen::VectorXd& x) const;
};

PSplineFit1D pspline_1d(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                        const Eigen::VectorXd& w, const SplineConfig& cfg);

struct PSplineFit2D {
  BSplineBasis basis_x1, basis_x2;
  Eigen::MatrixXd coef;  // nbasis_x1 x nbasis_x2
  double lambda1 = 0.0, lambda2 = 0.0;
  double edf = 0.0;

  double eval(double x1, double x2) const;
  BivariateSurface surface(const Eigen::VectorXd& gx1, const Eigen::VectorXd& gx2) const;
};

// Scattered-data tensor-product fit with additive difference penalties
// lambda1*P1 (x) I + lambda2*I (x) P2. GCV scans a tied lambda1=lambda2
// grid; pass fixed lambdas to pin either axis.
PSplineFit2D pspline_2d(const std::vector<Point2D>& points, const SplineConfig& cfg,
                        double x1_lo, double x1_hi, double x2_lo, double x2_hi);

// Grid-structured variant: values(i, j) observed at (row_coord[i],
// col_coord[j]) where every row shares the column grid. Uses the
// separable penalty (T1 + l1 P1) (x) (T2 + l2 P2), which factors the
// normal equations into two small solves and makes an anisotropic
// (lambda_row, lambda_col) GCV scan cheap.
PSplineFit2D pspline_2d_grid(const Eigen::VectorXd& row_coord, const Eigen::VectorXd& col_coord,
                             const Eigen::MatrixXd& values, const SplineConfig& cfg);

}  // namespace profit
