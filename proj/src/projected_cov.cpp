#include "projected_cov.h"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

namespace profit {

namespace {

constexpr int kTimeGridSize = 101;

double interp1(const Eigen::VectorXd& grid, const Eigen::VectorXd& vals, double t) {
  const int n = static_cast<int>(grid.size());
  if (t <= grid[0]) return vals[0];
  if (t >= grid[n - 1]) return vals[n - 1];
  const int hi = static_cast<int>(std::upper_bound(grid.data(), grid.data() + n, t) - grid.data());
  const int lo = hi - 1;
  const double w = (t - grid[lo]) / (grid[hi] - grid[lo]);
  return (1 - w) * vals[lo] + w * vals[hi];
}

// Pooled local-linear mean with bandwidth selection on the data points.
struct KernelMean {
  Eigen::VectorXd grid, fitted_grid;
  double bandwidth;
};

KernelMean kernelMean(const Eigen::VectorXd& t, const Eigen::VectorXd& w,
                      const Eigen::VectorXd& t_grid, const KernelConfig& cfg) {
  KernelMean out;
  out.grid = t_grid;
  std::vector<double> hs = cfg.bandwidths;
  if (hs.empty()) hs = {0.15 * (t.maxCoeff() - t.minCoeff() + 1e-12)};
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(t.size());
  double best = std::numeric_limits<double>::infinity();
  for (double h : hs) {
    const Eigen::VectorXd fit_at_data = local_linear_1d(t, w, ones, t, h, cfg);
    // leverage of a point on itself: k0 * V2 / (V0 V2 - V1^2)
    double edf = 0.0;
    const double k0 = cfg.kernel(0.0) / h;
    for (int i = 0; i < t.size(); ++i) {
      double v0 = 0, v1 = 0, v2 = 0;
      for (int j = 0; j < t.size(); ++j) {
        const double u = (t[j] - t[i]) / h;
        const double k = cfg.kernel(u) / h;
        v0 += k;
        v1 += k * u;
        v2 += k * u * u;
      }
      const double det = v0 * v2 - v1 * v1;
      edf += det > 0 ? k0 * v2 / det : 1.0;
    }
    const double rss = (w - fit_at_data).squaredNorm();
    const double n = static_cast<double>(t.size());
    if (edf >= n) continue;
    const double score = n * rss / ((n - edf) * (n - edf));
    if (score <= best) {
      best = score;
      out.bandwidth = h;
    }
  }
  if (!(best < std::numeric_limits<double>::infinity()))
    throw std::runtime_error("kernel mean: grid entirely undersmoothed");
  out.fitted_grid = local_linear_1d(t, w, ones, t_grid, out.bandwidth, cfg);
  return out;
}

}  // namespace

double ProjectedCovModel::psiAt(int l, double t) const {
  return interp1(t_grid, psi.row(l).transpose(), t);
}

double ProjectedCovModel::etaAt(double t) const { return interp1(t_grid, eta, t); }

ProjectedCovModel fit_projected_cov(const ProjectedSeries& ps, const ProjectedCovConfig& cfg,
                                    const std::optional<Eigen::VectorXd>& covariate,
                                    std::vector<std::string>* diagnostics) {
  const int n = ps.subjectCount();
  int with_pairs = 0;
  for (const auto& v : ps.values)
    if (v.size() >= 2) ++with_pairs;
  if (n < 2 || with_pairs < 2)
    throw std::invalid_argument("fit_projected_cov: need >= 2 subjects with >= 2 visits");
  const Eigen::VectorXd t_all = ps.pooledTimes();
  const Eigen::VectorXd w_all = ps.pooledValues();
  {
    std::vector<double> tt(t_all.data(), t_all.data() + t_all.size());
    std::sort(tt.begin(), tt.end());
    tt.erase(std::unique(tt.begin(), tt.end()), tt.end());
    if (tt.size() < 3) throw std::invalid_argument("insufficient longitudinal design");
  }
  if (covariate && covariate->size() != n)
    throw std::invalid_argument("covariate length does not match subject count");

  ProjectedCovModel model;
  model.pve_t = cfg.pve_t;
  const double t_lo = t_all.minCoeff(), t_hi = t_all.maxCoeff();
  model.t_grid = Eigen::VectorXd::LinSpaced(kTimeGridSize, std::min(0.0, t_lo),
                                            std::max(1.0, t_hi));

  // Centered covariate expanded to visit rows.
  Eigen::VectorXd z_rows;
  double z_center = 0.0;
  if (covariate) {
    double sum = 0.0;
    int count = 0;
    for (int i = 0; i < n; ++i) {
      sum += (*covariate)[i] * ps.values[static_cast<std::size_t>(i)].size();
      count += static_cast<int>(ps.values[static_cast<std::size_t>(i)].size());
    }
    z_center = sum / count;
    z_rows.resize(count);
    int at = 0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < ps.values[static_cast<std::size_t>(i)].size(); ++j)
        z_rows[at++] = (*covariate)[i] - z_center;
    model.has_covariate = true;
  }

  // Mean over time, pooled; with a covariate the linear coefficient and
  // the smooth mean are alternated to convergence.
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(t_all.size());
  const auto fit_eta = [&](const Eigen::VectorXd& resp) -> std::pair<Eigen::VectorXd, double> {
    if (cfg.use_kernel_smoother) {
      const KernelMean km = kernelMean(t_all, resp, model.t_grid, cfg.kernel);
      return {km.fitted_grid, km.bandwidth};
    }
    const PSplineFit1D f = pspline_1d(t_all, resp, ones, cfg.mean_spline);
    return {f.evalMany(model.t_grid), f.lambda};
  };
  double alpha = 0.0;
  Eigen::VectorXd eta_grid;
  if (!covariate) {
    eta_grid = fit_eta(w_all).first;
  } else {
    const double ztz = z_rows.squaredNorm();
    Eigen::VectorXd eta_at_data = Eigen::VectorXd::Zero(t_all.size());
    for (int iter = 0; iter < 50; ++iter) {
      const double new_alpha = ztz > 0 ? z_rows.dot(w_all - eta_at_data) / ztz : 0.0;
      eta_grid = fit_eta(w_all - new_alpha * z_rows).first;
      Eigen::VectorXd next(t_all.size());
      for (int i = 0; i < t_all.size(); ++i) next[i] = interp1(model.t_grid, eta_grid, t_all[i]);
      const bool done = std::abs(new_alpha - alpha) <= 1e-8 * (1.0 + std::abs(new_alpha)) &&
                        (next - eta_at_data).norm() <= 1e-8 * (1.0 + next.norm());
      alpha = new_alpha;
      eta_at_data = next;
      if (done) break;
    }
  }
  model.eta = eta_grid;
  model.covariate_coef = alpha;

  // Residuals about the unconstrained mean fit.
  std::vector<Eigen::VectorXd> resid(static_cast<std::size_t>(n));
  int at = 0;
  for (int i = 0; i < n; ++i) {
    const auto& ti = ps.times[static_cast<std::size_t>(i)];
    Eigen::VectorXd e(ti.size());
    for (int j = 0; j < ti.size(); ++j) {
      double fit = interp1(model.t_grid, eta_grid, ti[j]);
      if (covariate) fit += alpha * z_rows[at + j];
      e[j] = ps.values[static_cast<std::size_t>(i)][j] - fit;
    }
    resid[static_cast<std::size_t>(i)] = e;
    at += static_cast<int>(ti.size());
  }

  const double var_w =
      (w_all.array() - w_all.mean()).square().sum() / std::max(1, static_cast<int>(w_all.size()) - 1);
  model.sigma2_floor = std::max(1e-6 * var_w, 1e-300);

  // Off-diagonal residual products -> smooth covariance surface.
  std::vector<Point2D> products;
  for (int i = 0; i < n; ++i) {
    const auto& ti = ps.times[static_cast<std::size_t>(i)];
    const auto& e = resid[static_cast<std::size_t>(i)];
    for (int j = 0; j < ti.size(); ++j)
      for (int j2 = 0; j2 < ti.size(); ++j2)
        if (j != j2) products.push_back({ti[j], ti[j2], e[j] * e[j2], 1.0});
  }
  if (products.size() < 3) throw std::invalid_argument("insufficient longitudinal design");

  Eigen::MatrixXd gamma(kTimeGridSize, kTimeGridSize);
  if (cfg.use_kernel_smoother) {
    std::vector<double> hs = cfg.kernel.bandwidths;
    const double h = hs.empty() ? 0.2 : hs.front();
    std::vector<std::pair<double, double>> eval;
    eval.reserve(kTimeGridSize * kTimeGridSize);
    for (int a = 0; a < kTimeGridSize; ++a)
      for (int b = 0; b < kTimeGridSize; ++b) eval.emplace_back(model.t_grid[a], model.t_grid[b]);
    const Eigen::VectorXd flat = local_linear_2d(products, eval, h, cfg.kernel);
    for (int a = 0; a < kTimeGridSize; ++a)
      gamma.row(a) = flat.segment(a * kTimeGridSize, kTimeGridSize).transpose();
  } else {
    const PSplineFit2D f = pspline_2d(products, cfg.cov_spline, model.t_grid[0],
                                      model.t_grid[kTimeGridSize - 1], model.t_grid[0],
                                      model.t_grid[kTimeGridSize - 1]);
    gamma = f.surface(model.t_grid, model.t_grid).values;
  }
  gamma = 0.5 * (gamma + gamma.transpose()).eval();

  // Eigenexpansion with quadrature scaling, PVE truncation.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gamma);
  Eigen::VectorXd ev = es.eigenvalues().reverse();
  Eigen::MatrixXd vec = es.eigenvectors().rowwise().reverse();
  const double tiny = 1e-10 * std::max(var_w, 1e-300);
  double trace = 0.0;
  for (int i = 0; i < ev.size(); ++i)
    if (ev[i] / kTimeGridSize > tiny) trace += ev[i] / kTimeGridSize;
  int l = 0;
  if (trace > 0.0) {
    double cum = 0.0;
    while (l < ev.size() && cum / trace < cfg.pve_t && ev[l] / kTimeGridSize > tiny) {
      cum += ev[l] / kTimeGridSize;
      ++l;
    }
  }
  model.nu.resize(l);
  model.psi.resize(l, kTimeGridSize);
  const double sqrt_g = std::sqrt(double(kTimeGridSize));
  for (int i = 0; i < l; ++i) {
    model.nu[i] = ev[i] / kTimeGridSize;
    Eigen::VectorXd u = vec.col(i) * sqrt_g;
    const double integral = u.sum() / kTimeGridSize;
    double sign = integral > 1e-8 ? 1.0 : integral < -1e-8 ? -1.0 : 0.0;
    if (sign == 0.0) {
      for (int g = 0; g < kTimeGridSize && sign == 0.0; ++g)
        if (std::abs(u[g]) > 1e-12) sign = u[g] > 0 ? 1.0 : -1.0;
      if (sign == 0.0) sign = 1.0;
    }
    model.psi.row(i) = (sign * u).transpose();
  }

  // Noise variance: smooth the squared residuals over time and average
  // the excess over the covariance diagonal.
  Eigen::VectorXd d_all(t_all.size());
  at = 0;
  for (int i = 0; i < n; ++i) {
    const auto& e = resid[static_cast<std::size_t>(i)];
    for (int j = 0; j < e.size(); ++j) d_all[at++] = e[j] * e[j];
  }
  Eigen::VectorXd total_var_grid;
  if (cfg.use_kernel_smoother) {
    total_var_grid = kernelMean(t_all, d_all, model.t_grid, cfg.kernel).fitted_grid;
  } else {
    const PSplineFit1D f = pspline_1d(t_all, d_all, ones, cfg.mean_spline);
    total_var_grid = f.evalMany(model.t_grid);
  }
  double excess = 0.0;
  for (int g = 0; g < kTimeGridSize; ++g) excess += total_var_grid[g] - gamma(g, g);
  excess /= kTimeGridSize;
  if (excess < model.sigma2_floor) {
    if (diagnostics && excess < 0.0)
      diagnostics->push_back("fit_projected_cov: negative average noise variance; floored");
    excess = model.sigma2_floor;
  }
  model.sigma2 = excess;
  return model;
}

BlockCovariance assemble_blocks(const ProjectedSeries& ps, const ProjectedCovModel& model) {
  BlockCovariance out;
  const int n = ps.subjectCount();
  out.sigma.reserve(static_cast<std::size_t>(n));
  out.inv_sqrt.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const auto& ti = ps.times[static_cast<std::size_t>(i)];
    const int m = static_cast<int>(ti.size());
    Eigen::MatrixXd psi_at(m, model.order());
    for (int j = 0; j < m; ++j)
      for (int l = 0; l < model.order(); ++l) psi_at(j, l) = model.psiAt(l, ti[j]);
    Eigen::MatrixXd block = psi_at * model.nu.asDiagonal() * psi_at.transpose();
    block.diagonal().array() += model.sigma2;
    if (!block.allFinite())
      throw std::runtime_error("assemble_blocks: non-finite block for subject " +
                               ps.subject_ids[static_cast<std::size_t>(i)]);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(block);
    const double floor = out.eigen_floor_rel * es.eigenvalues().maxCoeff();
    Eigen::VectorXd lam = es.eigenvalues().cwiseMax(floor);
    const Eigen::MatrixXd v = es.eigenvectors();
    out.sigma.push_back(v * lam.asDiagonal() * v.transpose());
    out.inv_sqrt.push_back(v * lam.cwiseSqrt().cwiseInverse().asDiagonal() * v.transpose());
  }
  return out;
}

std::string projected_cov_to_json(const ProjectedCovModel& model) {
  nlohmann::json j;
  j["t_grid"] = std::vector<double>(model.t_grid.data(), model.t_grid.data() + model.t_grid.size());
  j["eta"] = std::vector<double>(model.eta.data(), model.eta.data() + model.eta.size());
  j["nu"] = std::vector<double>(model.nu.data(), model.nu.data() + model.nu.size());
  nlohmann::json psi = nlohmann::json::array();
  for (int l = 0; l < model.order(); ++l)
    psi.push_back(std::vector<double>(model.psi.row(l).begin(), model.psi.row(l).end()));
  j["psi"] = psi;
  j["sigma2"] = model.sigma2;
  j["pve_t"] = model.pve_t;
  if (model.has_covariate) j["covariate_coef"] = model.covariate_coef;
  return j.dump(1);
}

}  // namespace profit
