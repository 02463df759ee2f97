#pragma once
#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "local_linear.h"
#include "marginal_basis.h"
#include "pspline.h"

namespace profit {

// Mean and covariance model of one projected series: smooth mean over
// time, truncated eigenexpansion of the smooth covariance on a 101-point
// time grid, and a visit-level noise variance.
struct ProjectedCovModel {
  Eigen::VectorXd t_grid;       // 101 points
  Eigen::VectorXd eta;          // mean on t_grid
  double covariate_coef = 0.0;  // per-unit effect of the (centered) covariate
  bool has_covariate = false;
  Eigen::VectorXd nu;           // descending, >= 0, quadrature-scaled
  Eigen::MatrixXd psi;          // L x 101, (1/G) sum psi^2 = 1
  double sigma2 = 0.0;          // > 0 (floored)
  double sigma2_floor = 0.0;
  double pve_t = 0.0;

  int order() const { return static_cast<int>(nu.size()); }
  // Linear interpolation of the l-th eigenfunction.
  double psiAt(int l, double t) const;
  double etaAt(double t) const;
};

struct ProjectedCovConfig {
  double pve_t = 0.90;
  SplineConfig mean_spline;   // pooled mean over t
  SplineConfig cov_spline;    // bivariate covariance smoother
  // Alternative estimator for the mean/covariance smoothing step:
  // local-linear kernels instead of penalized splines.
  bool use_kernel_smoother = false;
  KernelConfig kernel;
};

// Fits the projected-series model: pooled smooth mean (optionally with a
// linear covariate term), covariance of the residual products smoothed
// off the diagonal, eigenexpansion truncated by PVE, and the noise
// variance from the smoothed diagonal minus the covariance diagonal.
ProjectedCovModel fit_projected_cov(const ProjectedSeries& ps, const ProjectedCovConfig& cfg,
                                    const std::optional<Eigen::VectorXd>& covariate = std::nullopt,
                                    std::vector<std::string>* diagnostics = nullptr);

// Per-subject covariance blocks and their inverse square roots.
struct BlockCovariance {
  std::vector<Eigen::MatrixXd> sigma;      // floored, symmetric, PD
  std::vector<Eigen::MatrixXd> inv_sqrt;   // S with S * sigma * S = I
  double eigen_floor_rel = 1e-8;
};

BlockCovariance assemble_blocks(const ProjectedSeries& ps, const ProjectedCovModel& model);

// Diagnostic dump (eta, covariance grid, nu, sigma2) as JSON.
std::string projected_cov_to_json(const ProjectedCovModel& model);

}  // namespace profit
