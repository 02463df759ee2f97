#pragma once
#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

namespace profit {

// Symmetric kernel density on [-1,1] with bandwidth; the bandwidth may
// be a single value or a grid for GCV selection.
struct KernelConfig {
  std::function<double(double)> kernel;  // default: Epanechnikov
  std::vector<double> bandwidths;        // one entry = fixed bandwidth

  KernelConfig();
  // Checks symmetry and unit mass on [-1,1] (numerically, <= 1e-6).
  void requireValid() const;
};

double epanechnikov(double u);

struct Point2D {
  double x1, x2, value, weight;
};

// Local-linear smoother in one dimension: at each evaluation point, the
// intercept of the kernel-weighted least-squares line. A singular local
// design falls back to the weighted mean (recorded in *diagnostics); an
// empty window throws, naming the evaluation point.
Eigen::VectorXd local_linear_1d(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                                const Eigen::VectorXd& w, const Eigen::VectorXd& eval,
                                double bandwidth, const KernelConfig& cfg,
                                std::vector<std::string>* diagnostics = nullptr);

// Local-plane intercept under a product kernel, computed through the
// weighted-least-squares closed form (moments V_pq and responses R_pq);
// equal to the direct 3x3 normal-equation solve.
Eigen::VectorXd local_linear_2d(const std::vector<Point2D>& points,
                                const std::vector<std::pair<double, double>>& eval,
                                double bandwidth, const KernelConfig& cfg);

// Specialization for a symmetric matrix of values on grid x grid with
// the diagonal excluded from the input sum, evaluated back on the same
// grid. The product-kernel moments reduce to a handful of banded matrix
// products, and the GCV ingredients (rss, edf over the off-diagonal
// cells) come out of the same pass.
struct GridSmooth {
  Eigen::MatrixXd fitted;
  double rss = 0.0;
  double edf = 0.0;
};
GridSmooth local_linear_2d_symgrid(const Eigen::VectorXd& grid, const Eigen::MatrixXd& raw,
                                   double bandwidth, const KernelConfig& cfg);

// Default bandwidth grid: 10 log-spaced values from twice the grid
// spacing to half the domain length.
std::vector<double> default_bandwidth_grid(double spacing, double span);

}  // namespace profit
