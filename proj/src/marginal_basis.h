#pragma once
#include <Eigen/Dense>
#include <string>
#include <vector>

#include "dataset.h"
#include "local_linear.h"
#include "pspline.h"

namespace profit {

// Smooth mean estimate: surface on (dataset grid) x (101-point time
// grid), plus one adjustment curve per subject-level covariate fitted by
// backfitting. Covariates are centered before fitting, so the level
// stays in the mean surface.
struct CovariateEffect {
  std::string name;
  Eigen::VectorXd curve;  // on the dataset grid
  double center = 0.0;
};

struct MeanModel {
  BivariateSurface mu;  // grid_x = s grid, grid_y = time grid
  std::vector<CovariateEffect> effects;
  bool backfit_converged = true;

  // mu(s_r, t) + sum_c (cov_c - center_c) * effect_c(s_r), evaluated for
  // a whole curve at once.
  Eigen::VectorXd fittedCurve(const LongitudinalFunctionalDataset& ds, int subject,
                              double t) const;
};

MeanModel estimate_mean(const LongitudinalFunctionalDataset& ds, const SplineConfig& cfg,
                        bool covariate_adjust, std::vector<std::string>* diagnostics = nullptr);

enum class WeightScheme { kPooled, kPerSubject };

struct MarginalCovariance {
  Eigen::VectorXd grid_s;
  Eigen::MatrixXd raw;       // diagonal populated but flagged: it carries
                             // the white-noise variance and is excluded
                             // from the smoothing input
  bool diagonal_flagged = true;
  Eigen::MatrixXd smoothed;  // symmetric; empty until smoothing runs
  Eigen::VectorXd weights;   // v_i actually used, sum(m_i v_i) = 1
  double bandwidth = 0.0;
  GcvChoice bandwidth_gcv;
};

MarginalCovariance raw_marginal_covariance(const LongitudinalFunctionalDataset& ds,
                                           const MeanModel& mean, WeightScheme scheme);

// Local-linear surface smoothing of the off-diagonal raw covariance,
// bandwidth by GCV unless the config pins one; result symmetrized.
void smooth_marginal_covariance(MarginalCovariance& mc, const KernelConfig& cfg);

struct MarginalBasis {
  Eigen::VectorXd grid_s;
  Eigen::VectorXd eigenvalues;    // descending, >= 0, quadrature-scaled
  Eigen::MatrixXd eigenfunctions;  // K x R, (1/R) sum phi^2 = 1
  double pve_threshold = 0.0;
  double pve_achieved = 0.0;
  double total_trace = 0.0;

  int count() const { return static_cast<int>(eigenvalues.size()); }
  std::uint64_t hash() const;
};

MarginalBasis eigen_basis(const MarginalCovariance& mc, double pve);

struct ProjectedSeries {
  int k = 0;
  std::vector<std::string> subject_ids;
  std::vector<Eigen::VectorXd> times;   // per subject
  std::vector<Eigen::VectorXd> values;  // quasi-projections W_{k,ij}
  std::uint64_t basis_hash = 0;

  int subjectCount() const { return static_cast<int>(values.size()); }
  int totalLength() const;
  Eigen::VectorXd pooledTimes() const;
  Eigen::VectorXd pooledValues() const;
};

// Riemann projection (1/R) sum_r Y_ij(s_r) phi_k(s_r) of the raw curves.
ProjectedSeries quasi_project(const LongitudinalFunctionalDataset& ds, const MarginalBasis& basis,
                              int k);

// Basis export for plotting (JSON).
std::string basis_to_json(const MarginalBasis& basis);

}  // namespace profit
