#include "dataset.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace profit {

std::optional<double> SubjectRecord::covariate(const std::string& name) const {
  for (const auto& [k, v] : covariates)
    if (k == name) return v;
  return std::nullopt;
}

LongitudinalFunctionalDataset::LongitudinalFunctionalDataset(Eigen::VectorXd grid_s,
                                                             std::vector<SubjectRecord> subjects,
                                                             std::array<double, 2> domain_t,
                                                             DatasetMeta meta)
    : grid_s_(std::move(grid_s)),
      subjects_(std::move(subjects)),
      domain_t_(domain_t),
      meta_(std::move(meta)) {}

int LongitudinalFunctionalDataset::totalVisits() const {
  int n = 0;
  for (const auto& s : subjects_) n += s.visits();
  return n;
}

Eigen::VectorXd LongitudinalFunctionalDataset::pooledTimes() const {
  Eigen::VectorXd t(totalVisits());
  int at = 0;
  for (const auto& s : subjects_) {
    t.segment(at, s.visits()) = s.times;
    at += s.visits();
  }
  return t;
}

std::vector<std::string> LongitudinalFunctionalDataset::covariateNames() const {
  if (subjects_.empty()) return {};
  std::vector<std::string> names;
  names.reserve(subjects_.front().covariates.size());
  for (const auto& [k, v] : subjects_.front().covariates) names.push_back(k);
  return names;
}

namespace {

std::string cell(const std::string& id, int visit, int grid_pt) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "subject %s, visit %d, grid %d", id.c_str(), visit, grid_pt);
  return buf;
}

}  // namespace

std::vector<Violation> LongitudinalFunctionalDataset::validate() const {
  std::vector<Violation> out;
  const int r = gridSize();
  if (r < 4) out.push_back({"grid length >= 4", "grid_s"});
  for (int i = 1; i < r; ++i)
    if (grid_s_[i] <= grid_s_[i - 1]) {
      out.push_back({"grid strictly increasing", "grid_s[" + std::to_string(i) + "]"});
      break;
    }
  if (r >= 2) {
    const double span = grid_s_[r - 1] - grid_s_[0];
    const double step = span / (r - 1);
    for (int i = 1; i < r; ++i) {
      const double d = grid_s_[i] - grid_s_[i - 1];
      if (std::abs(d - step) > 1e-8 * std::max(std::abs(step), 1.0)) {
        out.push_back({"grid equally spaced (relative tolerance 1e-8)",
                       "grid_s[" + std::to_string(i) + "]"});
        break;
      }
    }
  }
  if (subjects_.empty()) out.push_back({"at least one subject", "subjects"});
  std::vector<std::string> names0;
  for (std::size_t si = 0; si < subjects_.size(); ++si) {
    const auto& s = subjects_[si];
    const std::string where = "subject " + s.id;
    if (s.visits() < 1) out.push_back({"m_i >= 1 visits", where});
    if (s.curves.rows() != s.visits() || s.curves.cols() != r)
      out.push_back({"curve matrix is m_i x R", where});
    for (int j = 1; j < s.visits(); ++j)
      if (s.times[j] < s.times[j - 1]) {
        out.push_back({"times sorted ascending", where + ", visit " + std::to_string(j)});
        break;
      }
    for (int j = 0; j < s.visits(); ++j) {
      if (s.times[j] < domain_t_[0] - 1e-12 || s.times[j] > domain_t_[1] + 1e-12)
        out.push_back({"visit time inside domain", where + ", visit " + std::to_string(j)});
    }
    for (int j = 0; j < s.curves.rows(); ++j)
      for (int g = 0; g < s.curves.cols(); ++g)
        if (!std::isfinite(s.curves(j, g))) {
          out.push_back({"curve values finite", cell(s.id, j, g)});
          g = static_cast<int>(s.curves.cols());
          j = static_cast<int>(s.curves.rows());
        }
    std::vector<std::string> names;
    for (const auto& [k, v] : s.covariates) names.push_back(k);
    if (si == 0)
      names0 = names;
    else if (names != names0)
      out.push_back({"covariate name-set identical across subjects", where});
  }
  if (totalVisits() < 2) out.push_back({"total visit count N >= 2", "subjects"});
  return out;
}

void LongitudinalFunctionalDataset::requireValid() const {
  const auto v = validate();
  if (!v.empty())
    throw std::invalid_argument("invalid dataset: " + v.front().invariant + " at " +
                                v.front().location);
}

double BivariateSurface::eval(double x, double y) const {
  const auto locate = [](const Eigen::VectorXd& g, double v, int& i0, double& w) {
    const int n = static_cast<int>(g.size());
    if (n == 1 || v <= g[0]) {
      i0 = 0;
      w = 0.0;
      return;
    }
    if (v >= g[n - 1]) {
      i0 = n - 2 >= 0 ? n - 2 : 0;
      w = 1.0;
      return;
    }
    const int hi = static_cast<int>(std::upper_bound(g.data(), g.data() + n, v) - g.data());
    i0 = hi - 1;
    w = (v - g[i0]) / (g[i0 + 1] - g[i0]);
  };
  int ix, iy;
  double wx, wy;
  locate(grid_x, x, ix, wx);
  locate(grid_y, y, iy, wy);
  const int ix1 = std::min<int>(ix + 1, static_cast<int>(grid_x.size()) - 1);
  const int iy1 = std::min<int>(iy + 1, static_cast<int>(grid_y.size()) - 1);
  return (1 - wx) * (1 - wy) * values(ix, iy) + wx * (1 - wy) * values(ix1, iy) +
         (1 - wx) * wy * values(ix, iy1) + wx * wy * values(ix1, iy1);
}

void BivariateSurface::requireValid() const {
  if (values.rows() != grid_x.size() || values.cols() != grid_y.size())
    throw std::invalid_argument("surface dimensions do not match grids");
  for (int i = 1; i < grid_x.size(); ++i)
    if (grid_x[i] <= grid_x[i - 1]) throw std::invalid_argument("surface grid_x not increasing");
  for (int i = 1; i < grid_y.size(); ++i)
    if (grid_y[i] <= grid_y[i - 1]) throw std::invalid_argument("surface grid_y not increasing");
  if (!values.allFinite()) throw std::invalid_argument("surface values not finite");
}

std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t seed) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hashHex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace profit
