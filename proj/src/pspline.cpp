#include "pspline.h"

#include <Eigen/Cholesky>
#include <cmath>
#include <stdexcept>

namespace profit {

namespace {

// tr((M + L)^-1 M) given the Cholesky factor of M + L.
double traceSmoother(const Eigen::LLT<Eigen::MatrixXd>& llt, const Eigen::MatrixXd& m) {
  const Eigen::MatrixXd c1 = llt.matrixL().solve(m);
  const Eigen::MatrixXd c2 = llt.matrixL().solve(c1.transpose());
  return c2.trace();
}

Eigen::LLT<Eigen::MatrixXd> factorOrThrow(const Eigen::MatrixXd& a, const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error(std::string(what) +
                             ": singular penalized system; increase lambda or add data");
  return llt;
}

}  // namespace

double PSplineFit1D::eval(double x) const {
  double vals[8];
  int first;
  basis.evalNonzero(x, first, vals);
  double s = 0.0;
  for (int j = 0; j <= basis.degree(); ++j) s += vals[j] * coef[first + j];
  return s;
}

Eigen::VectorXd PSplineFit1D::evalMany(const Eigen::VectorXd& x) const {
  Eigen::VectorXd out(x.size());
  for (int i = 0; i < x.size(); ++i) out[i] = eval(x[i]);
  return out;
}

PSplineFit1D pspline_1d(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                        const Eigen::VectorXd& w, const SplineConfig& cfg) {
  const int n = static_cast<int>(x.size());
  if (y.size() != n || w.size() != n) throw std::invalid_argument("pspline_1d: length mismatch");
  if (n < 2) throw std::invalid_argument("pspline_1d: need at least 2 points");
  const double lo = x.minCoeff(), hi = x.maxCoeff();
  if (!(hi > lo)) throw std::runtime_error("pspline_1d: all x identical (rank error)");

  BSplineBasis basis(lo, hi, cfg.nbasis, cfg.degree);
  const int k = basis.size();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(k, k);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k);
  double yty = 0.0;
  double vals[8];
  for (int i = 0; i < n; ++i) {
    int first;
    basis.evalNonzero(x[i], first, vals);
    const double wi = w[i];
    yty += wi * y[i] * y[i];
    for (int a = 0; a <= cfg.degree; ++a) {
      rhs[first + a] += wi * vals[a] * y[i];
      for (int b = a; b <= cfg.degree; ++b) m(first + a, first + b) += wi * vals[a] * vals[b];
    }
  }
  m = m.selfadjointView<Eigen::Upper>();
  const Eigen::MatrixXd pen = basis.differencePenalty(cfg.penalty_order);

  PSplineFit1D fit{basis, Eigen::VectorXd(), 0.0, 0.0, {}};
  const auto grid = cfg.lambdaGrid();
  Eigen::VectorXd best_coef;
  double best_edf = 0.0;
  const auto eval_lambda = [&](double lambda) {
    const auto llt = factorOrThrow(m + lambda * pen, "pspline_1d");
    const Eigen::VectorXd c = llt.solve(rhs);
    const double rss = yty - 2.0 * c.dot(rhs) + c.dot(m * c);
    const double edf = traceSmoother(llt, m);
    return std::tuple<double, double, Eigen::VectorXd>(std::max(rss, 0.0), edf, c);
  };
  fit.gcv = gcv_select(grid, n, [&](double lambda) {
    const auto [rss, edf, c] = eval_lambda(lambda);
    return std::pair<double, double>(rss, edf);
  });
  const auto [rss, edf, c] = eval_lambda(fit.gcv.tuning);
  best_coef = c;
  best_edf = edf;
  fit.lambda = fit.gcv.tuning;
  fit.coef = best_coef;
  fit.edf = best_edf;
  return fit;
}

double PSplineFit2D::eval(double x1, double x2) const {
  double v1[8], v2[8];
  int f1, f2;
  basis_x1.evalNonzero(x1, f1, v1);
  basis_x2.evalNonzero(x2, f2, v2);
  double s = 0.0;
  for (int a = 0; a <= basis_x1.degree(); ++a)
    for (int b = 0; b <= basis_x2.degree(); ++b) s += v1[a] * v2[b] * coef(f1 + a, f2 + b);
  return s;
}

BivariateSurface PSplineFit2D::surface(const Eigen::VectorXd& gx1,
                                       const Eigen::VectorXd& gx2) const {
  BivariateSurface s;
  s.grid_x = gx1;
  s.grid_y = gx2;
  const Eigen::MatrixXd b1 = basis_x1.design(gx1);
  const Eigen::MatrixXd b2 = basis_x2.design(gx2);
  s.values = b1 * coef * b2.transpose();
  return s;
}

PSplineFit2D pspline_2d(const std::vector<Point2D>& points, const SplineConfig& cfg,
                        double x1_lo, double x1_hi, double x2_lo, double x2_hi) {
  const int n = static_cast<int>(points.size());
  if (n < 3) throw std::invalid_argument("pspline_2d: need at least 3 points");
  {
    bool vary1 = false, vary2 = false;
    for (const auto& p : points) {
      if (!std::isfinite(p.value)) throw std::invalid_argument("pspline_2d: non-finite value");
      vary1 |= p.x1 != points.front().x1;
      vary2 |= p.x2 != points.front().x2;
    }
    if (!vary1 || !vary2)
      throw std::runtime_error("pspline_2d: all points share one coordinate (rank error)");
  }

  BSplineBasis b1(x1_lo, x1_hi, cfg.nbasis, cfg.degree);
  BSplineBasis b2(x2_lo, x2_hi, cfg.nbasis, cfg.degree);
  const int k1 = b1.size(), k2 = b2.size(), k = k1 * k2;
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(k, k);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k);
  double yty = 0.0;
  const int d = cfg.degree;
  const int nnz = (d + 1) * (d + 1);
  std::vector<int> idx(static_cast<std::size_t>(nnz));
  std::vector<double> bv(static_cast<std::size_t>(nnz));
  double v1[8], v2[8];
  for (const auto& p : points) {
    int f1, f2;
    b1.evalNonzero(p.x1, f1, v1);
    b2.evalNonzero(p.x2, f2, v2);
    int t = 0;
    for (int a = 0; a <= d; ++a)
      for (int b = 0; b <= d; ++b, ++t) {
        idx[static_cast<std::size_t>(t)] = (f1 + a) * k2 + (f2 + b);
        bv[static_cast<std::size_t>(t)] = v1[a] * v2[b];
      }
    yty += p.weight * p.value * p.value;
    for (int a = 0; a < nnz; ++a) {
      rhs[idx[static_cast<std::size_t>(a)]] += p.weight * bv[static_cast<std::size_t>(a)] * p.value;
      for (int b = 0; b < nnz; ++b) {
        // accumulate full (small) block; symmetrization not worth the branch
        m(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(b)]) +=
            p.weight * bv[static_cast<std::size_t>(a)] * bv[static_cast<std::size_t>(b)];
      }
    }
  }
  const Eigen::MatrixXd p1 = b1.differencePenalty(cfg.penalty_order);
  const Eigen::MatrixXd p2 = b2.differencePenalty(cfg.penalty_order);
  Eigen::MatrixXd pen = Eigen::MatrixXd::Zero(k, k);
  // kron(P1, I) + kron(I, P2)
  for (int a = 0; a < k1; ++a)
    for (int b = 0; b < k1; ++b)
      if (p1(a, b) != 0.0)
        for (int j = 0; j < k2; ++j) pen(a * k2 + j, b * k2 + j) += p1(a, b);
  for (int a = 0; a < k1; ++a) pen.block(a * k2, a * k2, k2, k2) += p2;

  const auto eval_lambda = [&](double lambda) {
    const auto llt = factorOrThrow(m + lambda * pen, "pspline_2d");
    const Eigen::VectorXd c = llt.solve(rhs);
    const double rss = std::max(yty - 2.0 * c.dot(rhs) + c.dot(m * c), 0.0);
    const double edf = traceSmoother(llt, m);
    return std::tuple<double, double, Eigen::VectorXd>(rss, edf, c);
  };
  const auto grid = cfg.lambdaGrid();
  const GcvChoice choice = gcv_select(grid, n, [&](double lambda) {
    const auto [rss, edf, c] = eval_lambda(lambda);
    return std::pair<double, double>(rss, edf);
  });
  const auto [rss, edf, c] = eval_lambda(choice.tuning);

  PSplineFit2D fit{b1, b2, Eigen::MatrixXd(), choice.tuning, choice.tuning, edf};
  fit.coef = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                            Eigen::RowMajor>>(c.data(), k1, k2);
  return fit;
}

PSplineFit2D pspline_2d_grid(const Eigen::VectorXd& row_coord, const Eigen::VectorXd& col_coord,
                             const Eigen::MatrixXd& values, const SplineConfig& cfg) {
  const int nr = static_cast<int>(row_coord.size());
  const int nc = static_cast<int>(col_coord.size());
  if (values.rows() != nr || values.cols() != nc)
    throw std::invalid_argument("pspline_2d_grid: dimensions mismatch");
  const double rlo = row_coord.minCoeff(), rhi = row_coord.maxCoeff();
  const double clo = col_coord.minCoeff(), chi = col_coord.maxCoeff();
  if (!(rhi > rlo) || !(chi > clo))
    throw std::runtime_error("pspline_2d_grid: degenerate coordinate range (rank error)");

  BSplineBasis br(rlo, rhi, cfg.nbasis, cfg.degree);
  BSplineBasis bc(clo, chi, cfg.nbasis, cfg.degree);
  const Eigen::MatrixXd dr = br.design(row_coord);
  const Eigen::MatrixXd dc = bc.design(col_coord);
  const Eigen::MatrixXd tr = dr.transpose() * dr;
  const Eigen::MatrixXd tc = dc.transpose() * dc;
  const Eigen::MatrixXd rhs = dr.transpose() * values * dc;
  const Eigen::MatrixXd pr = br.differencePenalty(cfg.penalty_order);
  const Eigen::MatrixXd pc = bc.differencePenalty(cfg.penalty_order);
  const double yty = values.squaredNorm();
  const int n = nr * nc;

  const auto grid = cfg.lambdaGrid();
  struct AxisFactor {
    Eigen::LLT<Eigen::MatrixXd> llt;
    double edf;
  };
  std::vector<AxisFactor> row_f, col_f;
  row_f.reserve(grid.size());
  col_f.reserve(grid.size());
  for (double l : grid) {
    auto lr = factorOrThrow(tr + l * pr, "pspline_2d_grid");
    const double er = traceSmoother(lr, tr);
    row_f.push_back({std::move(lr), er});
    auto lc = factorOrThrow(tc + l * pc, "pspline_2d_grid");
    const double ec = traceSmoother(lc, tc);
    col_f.push_back({std::move(lc), ec});
  }

  double best = std::numeric_limits<double>::infinity();
  int bi = -1, bj = -1;
  for (int i = 0; i < static_cast<int>(grid.size()); ++i) {
    const Eigen::MatrixXd g = row_f[static_cast<std::size_t>(i)].llt.solve(rhs);
    for (int j = 0; j < static_cast<int>(grid.size()); ++j) {
      const Eigen::MatrixXd c =
          col_f[static_cast<std::size_t>(j)].llt.solve(g.transpose()).transpose();
      const double edf =
          row_f[static_cast<std::size_t>(i)].edf * col_f[static_cast<std::size_t>(j)].edf;
      if (edf >= n) continue;
      const double rss = std::max(
          yty - 2.0 * (c.array() * rhs.array()).sum() + (c.transpose() * tr * c * tc).trace(),
          0.0);
      const double score = n * rss / ((n - edf) * (n - edf));
      if (score <= best) {  // ties toward smoother (later = larger lambda)
        best = score;
        bi = i;
        bj = j;
      }
    }
  }
  if (bi < 0) throw std::runtime_error("gcv: grid entirely undersmoothed");

  const Eigen::MatrixXd g = row_f[static_cast<std::size_t>(bi)].llt.solve(rhs);
  const Eigen::MatrixXd c =
      col_f[static_cast<std::size_t>(bj)].llt.solve(g.transpose()).transpose();
  PSplineFit2D fit{br, bc, c, grid[static_cast<std::size_t>(bi)],
                   grid[static_cast<std::size_t>(bj)],
                   row_f[static_cast<std::size_t>(bi)].edf * col_f[static_cast<std::size_t>(bj)].edf};
  return fit;
}

}  // namespace profit
