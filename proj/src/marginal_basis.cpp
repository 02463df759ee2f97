#include "marginal_basis.h"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "simd_kernels.h"

namespace profit {

namespace {

Eigen::VectorXd timeGrid(const LongitudinalFunctionalDataset& ds, int count = 101) {
  const auto [lo, hi] = ds.domainT();
  return Eigen::VectorXd::LinSpaced(count, lo, hi);
}

// Centered covariate value per subject, pooled-visit mean as the center.
Eigen::VectorXd centeredCovariate(const LongitudinalFunctionalDataset& ds,
                                  const std::string& name, double& center) {
  Eigen::VectorXd v(ds.subjectCount());
  double sum = 0.0;
  int n = 0;
  for (int i = 0; i < ds.subjectCount(); ++i) {
    const auto c = ds.subjects()[static_cast<std::size_t>(i)].covariate(name);
    if (!c) throw std::invalid_argument("covariate '" + name + "' missing for subject " +
                                        ds.subjects()[static_cast<std::size_t>(i)].id);
    v[i] = *c;
    const int m = ds.subjects()[static_cast<std::size_t>(i)].visits();
    sum += *c * m;
    n += m;
  }
  center = sum / n;
  return v.array() - center;
}

}  // namespace

Eigen::VectorXd MeanModel::fittedCurve(const LongitudinalFunctionalDataset& ds, int subject,
                                       double t) const {
  const int r = ds.gridSize();
  Eigen::VectorXd out(r);
  for (int g = 0; g < r; ++g) out[g] = mu.eval(ds.grid()[g], t);
  for (const auto& eff : effects) {
    const auto c = ds.subjects()[static_cast<std::size_t>(subject)].covariate(eff.name);
    out += (*c - eff.center) * eff.curve;
  }
  return out;
}

MeanModel estimate_mean(const LongitudinalFunctionalDataset& ds, const SplineConfig& cfg,
                        bool covariate_adjust, std::vector<std::string>* diagnostics) {
  ds.requireValid();
  const int r = ds.gridSize();
  const int n_curves = ds.totalVisits();
  const Eigen::VectorXd tg = timeGrid(ds);

  // Stack all curves: row per (i, j), column per grid point; every curve
  // shares the grid, so the pooled fit is grid-structured.
  Eigen::MatrixXd y(n_curves, r);
  Eigen::VectorXd t(n_curves);
  int at = 0;
  for (const auto& s : ds.subjects()) {
    y.middleRows(at, s.visits()) = s.curves;
    t.segment(at, s.visits()) = s.times;
    at += s.visits();
  }

  const auto fit_mu = [&](const Eigen::MatrixXd& resp) {
    return pspline_2d_grid(t, ds.grid(), resp, cfg);
  };

  MeanModel model;
  const auto names = covariate_adjust ? ds.covariateNames() : std::vector<std::string>{};
  if (names.empty()) {
    const PSplineFit2D fit = fit_mu(y);
    model.mu.grid_x = ds.grid();
    model.mu.grid_y = tg;
    model.mu.values = fit.surface(ds.grid(), tg).values;
    return model;
  }

  // Backfitting: alternate the surface fit on partial residuals with a
  // per-grid-point regression of residuals on each centered covariate,
  // smoothed along s.
  const int nc = static_cast<int>(names.size());
  std::vector<Eigen::VectorXd> cov(static_cast<std::size_t>(nc));
  model.effects.resize(static_cast<std::size_t>(nc));
  Eigen::MatrixXd cov_rows(n_curves, nc);  // centered, repeated per visit
  for (int c = 0; c < nc; ++c) {
    model.effects[static_cast<std::size_t>(c)].name = names[static_cast<std::size_t>(c)];
    cov[static_cast<std::size_t>(c)] =
        centeredCovariate(ds, names[static_cast<std::size_t>(c)],
                          model.effects[static_cast<std::size_t>(c)].center);
    model.effects[static_cast<std::size_t>(c)].curve = Eigen::VectorXd::Zero(r);
    int row = 0;
    for (int i = 0; i < ds.subjectCount(); ++i)
      for (int j = 0; j < ds.subjects()[static_cast<std::size_t>(i)].visits(); ++j)
        cov_rows(row++, c) = cov[static_cast<std::size_t>(c)][i];
  }

  PSplineFit2D fit = fit_mu(y);
  SplineConfig curve_cfg = cfg;
  bool converged = false;
  for (int iter = 0; iter < 50 && !converged; ++iter) {
    // Residuals about the current mean surface.
    Eigen::MatrixXd resid = y;
    const Eigen::MatrixXd mu_rows =
        fit.basis_x1.design(t) * fit.coef * fit.basis_x2.design(ds.grid()).transpose();
    resid -= mu_rows;
    for (int c = 0; c < nc; ++c)
      resid -= cov_rows.col(c) * model.effects[static_cast<std::size_t>(c)].curve.transpose();

    double max_rel = 0.0;
    for (int c = 0; c < nc; ++c) {
      auto& eff = model.effects[static_cast<std::size_t>(c)];
      const Eigen::VectorXd& z = cov_rows.col(c);
      const double ztz = z.squaredNorm();
      // slope per grid point of (partial residual + current effect) on z
      Eigen::VectorXd raw_alpha =
          ((resid + z * eff.curve.transpose()).transpose() * z) / ztz;
      const PSplineFit1D sm = pspline_1d(ds.grid(), raw_alpha,
                                         Eigen::VectorXd::Ones(r), curve_cfg);
      const Eigen::VectorXd smoothed = sm.evalMany(ds.grid());
      const double denom = std::max(1e-12, smoothed.norm());
      max_rel = std::max(max_rel, (smoothed - eff.curve).norm() / denom);
      resid += z * (eff.curve - smoothed).transpose();
      eff.curve = smoothed;
    }

    Eigen::MatrixXd partial = y;
    for (int c = 0; c < nc; ++c)
      partial -= cov_rows.col(c) * model.effects[static_cast<std::size_t>(c)].curve.transpose();
    fit = fit_mu(partial);
    converged = max_rel < 1e-6;
  }
  if (!converged && diagnostics)
    diagnostics->push_back("estimate_mean: backfitting did not converge in 50 iterations");
  model.backfit_converged = converged;
  model.mu.grid_x = ds.grid();
  model.mu.grid_y = tg;
  model.mu.values = fit.surface(ds.grid(), tg).values;
  return model;
}

MarginalCovariance raw_marginal_covariance(const LongitudinalFunctionalDataset& ds,
                                           const MeanModel& mean, WeightScheme scheme) {
  ds.requireValid();
  const int r = ds.gridSize();
  const int n = ds.subjectCount();
  const int total = ds.totalVisits();

  MarginalCovariance mc;
  mc.grid_s = ds.grid();
  mc.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    const int m = ds.subjects()[static_cast<std::size_t>(i)].visits();
    mc.weights[i] = scheme == WeightScheme::kPooled ? 1.0 / total : 1.0 / (double(n) * m);
  }

  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> acc =
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>::Zero(r, r);
  Eigen::VectorXd resid(r);
  for (int i = 0; i < n; ++i) {
    const auto& subj = ds.subjects()[static_cast<std::size_t>(i)];
    for (int j = 0; j < subj.visits(); ++j) {
      resid = subj.curves.row(j).transpose() - mean.fittedCurve(ds, i, subj.times[j]);
      simd::rank1_upper(acc.data(), resid.data(), mc.weights[i], static_cast<std::size_t>(r));
    }
  }
  mc.raw = acc.selfadjointView<Eigen::Upper>();
  mc.diagonal_flagged = true;
  return mc;
}

void smooth_marginal_covariance(MarginalCovariance& mc, const KernelConfig& cfg) {
  if (mc.raw.size() == 0) throw std::invalid_argument("raw covariance not populated");
  cfg.requireValid();
  const int r = static_cast<int>(mc.grid_s.size());
  const double span = mc.grid_s[r - 1] - mc.grid_s[0];
  const double spacing = span / (r - 1);
  std::vector<double> grid =
      cfg.bandwidths.empty() ? default_bandwidth_grid(spacing, span) : cfg.bandwidths;

  if (grid.size() == 1) {
    const GridSmooth s = local_linear_2d_symgrid(mc.grid_s, mc.raw, grid[0], cfg);
    mc.smoothed = 0.5 * (s.fitted + s.fitted.transpose());
    mc.bandwidth = grid[0];
    return;
  }
  const int n_cells = r * (r - 1);
  mc.bandwidth_gcv = gcv_select(grid, n_cells, [&](double h) {
    const GridSmooth s = local_linear_2d_symgrid(mc.grid_s, mc.raw, h, cfg);
    return std::pair<double, double>(s.rss, s.edf);
  });
  mc.bandwidth = mc.bandwidth_gcv.tuning;
  const GridSmooth s = local_linear_2d_symgrid(mc.grid_s, mc.raw, mc.bandwidth, cfg);
  mc.smoothed = 0.5 * (s.fitted + s.fitted.transpose());
}

std::uint64_t MarginalBasis::hash() const {
  std::uint64_t h = fnv1a(eigenvalues.data(), sizeof(double) * eigenvalues.size());
  h = fnv1a(eigenfunctions.data(), sizeof(double) * eigenfunctions.size(), h);
  return h;
}

MarginalBasis eigen_basis(const MarginalCovariance& mc, double pve) {
  if (mc.smoothed.size() == 0) throw std::invalid_argument("smoothed covariance not populated");
  if (!(pve > 0.0 && pve <= 1.0)) throw std::invalid_argument("pve must be in (0, 1]");
  const int r = static_cast<int>(mc.grid_s.size());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(mc.smoothed);
  if (es.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");

  // Descending order; matrix eigenvalues scaled by 1/R approximate the
  // operator eigenvalues, eigenvectors scaled by sqrt(R) so that
  // (1/R) sum phi^2 = 1. Negative eigenvalues are floored to zero and
  // carry no trace mass.
  Eigen::VectorXd ev = es.eigenvalues().reverse();
  Eigen::MatrixXd vec = es.eigenvectors().rowwise().reverse();
  double trace = 0.0;
  for (int i = 0; i < r; ++i) trace += std::max(ev[i], 0.0) / r;
  if (trace <= 0.0)
    throw std::runtime_error("covariance estimate negative-definite; increase smoothing");

  int k = 0;
  double cum = 0.0;
  while (k < r && (cum / trace) < pve && ev[k] > 0.0) {
    cum += ev[k] / r;
    ++k;
  }
  if (k == 0) throw std::runtime_error("covariance estimate negative-definite; increase smoothing");

  MarginalBasis basis;
  basis.grid_s = mc.grid_s;
  basis.pve_threshold = pve;
  basis.total_trace = trace;
  basis.pve_achieved = cum / trace;
  basis.eigenvalues.resize(k);
  basis.eigenfunctions.resize(k, r);
  const double sqrt_r = std::sqrt(double(r));
  for (int i = 0; i < k; ++i) {
    basis.eigenvalues[i] = ev[i] / r;
    Eigen::VectorXd phi = vec.col(i) * sqrt_r;
    // Sign convention: nonnegative integral; near-zero integral resolves
    // by the first nonzero coordinate.
    const double integral = phi.sum() / r;
    double sign = integral > 1e-8 ? 1.0 : integral < -1e-8 ? -1.0 : 0.0;
    if (sign == 0.0) {
      for (int g = 0; g < r && sign == 0.0; ++g)
        if (std::abs(phi[g]) > 1e-12) sign = phi[g] > 0 ? 1.0 : -1.0;
      if (sign == 0.0) sign = 1.0;
    }
    basis.eigenfunctions.row(i) = (sign * phi).transpose();
  }
  return basis;
}

int ProjectedSeries::totalLength() const {
  int n = 0;
  for (const auto& v : values) n += static_cast<int>(v.size());
  return n;
}

Eigen::VectorXd ProjectedSeries::pooledTimes() const {
  Eigen::VectorXd out(totalLength());
  int at = 0;
  for (const auto& t : times) {
    out.segment(at, t.size()) = t;
    at += static_cast<int>(t.size());
  }
  return out;
}

Eigen::VectorXd ProjectedSeries::pooledValues() const {
  Eigen::VectorXd out(totalLength());
  int at = 0;
  for (const auto& v : values) {
    out.segment(at, v.size()) = v;
    at += static_cast<int>(v.size());
  }
  return out;
}

ProjectedSeries quasi_project(const LongitudinalFunctionalDataset& ds, const MarginalBasis& basis,
                              int k) {
  if (k < 0 || k >= basis.count()) throw std::invalid_argument("projection index out of range");
  const int r = ds.gridSize();
  if (basis.grid_s.size() != r || (basis.grid_s - ds.grid()).cwiseAbs().maxCoeff() > 1e-12)
    throw std::invalid_argument("basis grid does not match dataset grid");
  const Eigen::VectorXd phi = basis.eigenfunctions.row(k).transpose();
  ProjectedSeries ps;
  ps.k = k;
  ps.basis_hash = basis.hash();
  ps.subject_ids.reserve(ds.subjects().size());
  ps.times.reserve(ds.subjects().size());
  ps.values.reserve(ds.subjects().size());
  Eigen::RowVectorXd crow(r);
  for (const auto& subj : ds.subjects()) {
    Eigen::VectorXd w(subj.visits());
    for (int j = 0; j < subj.visits(); ++j) {
      crow = subj.curves.row(j);  // contiguous copy of the row
      w[j] = simd::dot(crow.data(), phi.data(), static_cast<std::size_t>(r)) / r;
    }
    ps.subject_ids.push_back(subj.id);
    ps.times.push_back(subj.times);
    ps.values.push_back(std::move(w));
  }
  return ps;
}

std::string basis_to_json(const MarginalBasis& basis) {
  nlohmann::json j;
  j["grid_s"] = std::vector<double>(basis.grid_s.data(), basis.grid_s.data() + basis.grid_s.size());
  j["eigenvalues"] =
      std::vector<double>(basis.eigenvalues.data(), basis.eigenvalues.data() + basis.count());
  nlohmann::json funcs = nlohmann::json::array();
  for (int k = 0; k < basis.count(); ++k)
    funcs.push_back(std::vector<double>(basis.eigenfunctions.row(k).begin(),
                                        basis.eigenfunctions.row(k).end()));
  j["eigenfunctions"] = funcs;
  j["pve_threshold"] = basis.pve_threshold;
  j["pve_achieved"] = basis.pve_achieved;
  j["total_trace"] = basis.total_trace;
  return j.dump(1);
}

}  // namespace profit
