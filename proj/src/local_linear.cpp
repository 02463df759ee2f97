#include "local_linear.h"

#include <cmath>
#include <stdexcept>

#include "gcv.h"

namespace profit {

double epanechnikov(double u) {
  const double t = 1.0 - u * u;
  return t > 0.0 ? 0.75 * t : 0.0;
}

KernelConfig::KernelConfig() : kernel(epanechnikov) {}

void KernelConfig::requireValid() const {
  if (!kernel) throw std::invalid_argument("kernel not set");
  for (double b : bandwidths)
    if (!(b > 0.0)) throw std::invalid_argument("bandwidth must be positive");
  // Simpson rule on [-1,1], 201 nodes.
  const int n = 200;
  double mass = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double u = -1.0 + 2.0 * i / n;
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    mass += w * kernel(u);
    if (std::abs(kernel(u) - kernel(-u)) > 1e-12)
      throw std::invalid_argument("kernel not symmetric");
  }
  mass *= (2.0 / n) / 3.0;
  if (std::abs(mass - 1.0) > 1e-6)
    throw std::invalid_argument("kernel does not integrate to 1 on [-1,1]");
}

std::vector<double> default_bandwidth_grid(double spacing, double span) {
  return log_grid(2.0 * spacing, 0.5 * span, 10);
}

Eigen::VectorXd local_linear_1d(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                                const Eigen::VectorXd& w, const Eigen::VectorXd& eval,
                                double h, const KernelConfig& cfg,
                                std::vector<std::string>* diagnostics) {
  if (x.size() != y.size() || x.size() != w.size())
    throw std::invalid_argument("local_linear_1d: x, y, w lengths differ");
  if (!(h > 0.0)) throw std::invalid_argument("local_linear_1d: bandwidth must be positive");
  Eigen::VectorXd out(eval.size());
  for (int e = 0; e < eval.size(); ++e) {
    const double c = eval[e];
    double v0 = 0, v1 = 0, v2 = 0, r0 = 0, r1 = 0;
    double xmin = 0, xmax = 0;
    bool any = false;
    for (int i = 0; i < x.size(); ++i) {
      const double u = (x[i] - c) / h;
      const double k = cfg.kernel(u) * w[i] / h;
      if (k <= 0.0) continue;
      if (!any || x[i] < xmin) xmin = x[i];
      if (!any || x[i] > xmax) xmax = x[i];
      any = true;
      v0 += k;
      v1 += k * u;
      v2 += k * u * u;
      r0 += k * y[i];
      r1 += k * u * y[i];
    }
    if (!any || v0 <= 0.0)
      throw std::runtime_error("local_linear_1d: empty window at eval point " +
                               std::to_string(c));
    const double det = v0 * v2 - v1 * v1;
    if (xmax == xmin || det <= 1e-12 * v0 * v2 || !(det > 0.0)) {
      if (diagnostics)
        diagnostics->push_back("local_linear_1d: singular window at eval point " +
                               std::to_string(c) + "; weighted-mean fallback");
      out[e] = r0 / v0;
    } else {
      out[e] = (r0 * v2 - r1 * v1) / det;
    }
  }
  return out;
}

Eigen::VectorXd local_linear_2d(const std::vector<Point2D>& points,
                                const std::vector<std::pair<double, double>>& eval,
                                double h, const KernelConfig& cfg) {
  if (!(h > 0.0)) throw std::invalid_argument("local_linear_2d: bandwidth must be positive");
  for (const auto& p : points)
    if (!std::isfinite(p.x1) || !std::isfinite(p.x2) || !std::isfinite(p.value) ||
        !std::isfinite(p.weight))
      throw std::invalid_argument("local_linear_2d: non-finite input point");
  Eigen::VectorXd out(static_cast<int>(eval.size()));
  for (int e = 0; e < static_cast<int>(eval.size()); ++e) {
    const auto [c1, c2] = eval[static_cast<std::size_t>(e)];
    double v00 = 0, v10 = 0, v01 = 0, v20 = 0, v02 = 0, v11 = 0;
    double r00 = 0, r10 = 0, r01 = 0;
    int used = 0;
    for (const auto& p : points) {
      const double u = (p.x1 - c1) / h, v = (p.x2 - c2) / h;
      const double k = cfg.kernel(u) * cfg.kernel(v) * p.weight / (h * h);
      if (k <= 0.0) continue;
      ++used;
      v00 += k;
      v10 += k * u;
      v01 += k * v;
      v20 += k * u * u;
      v02 += k * v * v;
      v11 += k * u * v;
      r00 += k * p.value;
      r10 += k * u * p.value;
      r01 += k * v * p.value;
    }
    const double a = v20 * v02 - v11 * v11;
    const double b = v10 * v02 - v01 * v11;
    const double c = v01 * v20 - v10 * v11;
    const double den = a * v00 - b * v10 - c * v01;
    if (used < 3 || !(den > 1e-12 * std::max(1.0, a * v00)))
      throw std::runtime_error("local_linear_2d: degenerate window at eval (" +
                               std::to_string(c1) + ", " + std::to_string(c2) + ")");
    out[e] = (a * r00 - b * r10 - c * r01) / den;
  }
  return out;
}

GridSmooth local_linear_2d_symgrid(const Eigen::VectorXd& grid, const Eigen::MatrixXd& raw,
                                   double h, const KernelConfig& cfg) {
  const int r = static_cast<int>(grid.size());
  if (raw.rows() != r || raw.cols() != r)
    throw std::invalid_argument("symgrid smoother: matrix does not match grid");
  if (!(h > 0.0)) throw std::invalid_argument("symgrid smoother: bandwidth must be positive");

  // Kernel moment bands A_p[a, j] = K((s_j - s_a)/h)/h * ((s_j - s_a)/h)^p.
  Eigen::MatrixXd a0(r, r), a1(r, r), a2(r, r);
  for (int a = 0; a < r; ++a)
    for (int j = 0; j < r; ++j) {
      const double u = (grid[j] - grid[a]) / h;
      const double k = cfg.kernel(u) / h;
      a0(a, j) = k;
      a1(a, j) = k * u;
      a2(a, j) = k * u * u;
    }
  Eigen::MatrixXd off = raw;
  off.diagonal().setZero();

  const Eigen::VectorXd u0 = a0.rowwise().sum();
  const Eigen::VectorXd u1 = a1.rowwise().sum();
  const Eigen::VectorXd u2 = a2.rowwise().sum();

  // V_pq(a,b) = u_p[a] u_q[b] - (A_p A_q^T)(a,b): product moments over
  // all index pairs j != j'. R_pq likewise with the raw values (diagonal
  // zeroed so the j = j' terms vanish).
  const Eigen::MatrixXd p00 = a0 * a0.transpose();
  const Eigen::MatrixXd p01 = a0 * a1.transpose();
  const Eigen::MatrixXd p02 = a0 * a2.transpose();
  const Eigen::MatrixXd p11 = a1 * a1.transpose();
  const Eigen::MatrixXd p12 = a1 * a2.transpose();

  const Eigen::MatrixXd r00m = a0 * off * a0.transpose();
  const Eigen::MatrixXd r10m = a1 * off * a0.transpose();
  const Eigen::MatrixXd r01m = a0 * off * a1.transpose();

  GridSmooth out;
  out.fitted.resize(r, r);
  const double k0 = cfg.kernel(0.0) / h;
  double rss = 0.0, edf = 0.0;
  for (int a = 0; a < r; ++a)
    for (int b = 0; b < r; ++b) {
      const double v00 = u0[a] * u0[b] - p00(a, b);
      const double v10 = u1[a] * u0[b] - p01(b, a);
      const double v01 = u0[a] * u1[b] - p01(a, b);
      const double v20 = u2[a] * u0[b] - p02(b, a);
      const double v02 = u0[a] * u2[b] - p02(a, b);
      const double v11 = u1[a] * u1[b] - p11(a, b);
      const double ca = v20 * v02 - v11 * v11;
      const double cb = v10 * v02 - v01 * v11;
      const double cc = v01 * v20 - v10 * v11;
      const double den = ca * v00 - cb * v10 - cc * v01;
      if (!(std::abs(den) > 1e-300))
        throw std::runtime_error("symgrid smoother: degenerate window; increase bandwidth");
      const double num = ca * r00m(a, b) - cb * r10m(a, b) - cc * r01m(a, b);
      out.fitted(a, b) = num / den;
      if (a != b) {
        const double resid = raw(a, b) - out.fitted(a, b);
        rss += resid * resid;
        edf += ca * k0 * k0 / den;  // leverage of the cell on itself
      }
    }
  out.rss = rss;
  out.edf = edf;
  return out;
}

}  // namespace profit
