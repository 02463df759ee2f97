#pragma once
#include <Eigen/Dense>
#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace profit {

// One subject: visit times (ascending) and one curve per visit, all
// curves sampled on the dataset's shared grid. Scalar covariates (e.g.
// a baseline age) are constant within subject.
struct SubjectRecord {
  std::string id;
  Eigen::VectorXd times;   // length m_i, ascending
  Eigen::MatrixXd curves;  // m_i x R
  std::vector<std::pair<std::string, double>> covariates;  // sorted by name

  int visits() const { return static_cast<int>(times.size()); }
  std::optional<double> covariate(const std::string& name) const;
};

// Affine map internal -> original: original = offset + scale * internal.
struct AxisRescale {
  double offset = 0.0;
  double scale = 1.0;
};

struct DatasetMeta {
  AxisRescale s_rescale;
  AxisRescale t_rescale;
  std::string source;
  std::string source_hash;
};

struct Violation {
  std::string invariant;
  std::string location;
};

// Longitudinally observed functional data: curves on a shared, equally
// spaced grid in s, observed at sparse per-subject visit times in t.
// Internally both axes live on [0,1]. Immutable after construction.
class LongitudinalFunctionalDataset {
 public:
  LongitudinalFunctionalDataset() = default;
  LongitudinalFunctionalDataset(Eigen::VectorXd grid_s, std::vector<SubjectRecord> subjects,
                                std::array<double, 2> domain_t = {0.0, 1.0},
                                DatasetMeta meta = {});

  const Eigen::VectorXd& grid() const { return grid_s_; }
  int gridSize() const { return static_cast<int>(grid_s_.size()); }
  const std::vector<SubjectRecord>& subjects() const { return subjects_; }
  int subjectCount() const { return static_cast<int>(subjects_.size()); }
  std::array<double, 2> domainT() const { return domain_t_; }
  const DatasetMeta& meta() const { return meta_; }

  // Total number of visits N = sum of m_i.
  int totalVisits() const;
  // Pooled visit times in subject-major, visit-minor order.
  Eigen::VectorXd pooledTimes() const;
  // Names of covariates (validated identical across subjects).
  std::vector<std::string> covariateNames() const;

  // Diagnostic check of every type invariant; empty means valid.
  std::vector<Violation> validate() const;
  // Throws std::invalid_argument listing the first violation.
  void requireValid() const;

 private:
  Eigen::VectorXd grid_s_;
  std::vector<SubjectRecord> subjects_;
  std::array<double, 2> domain_t_{0.0, 1.0};
  DatasetMeta meta_;
};

// Surface on a rectangular grid; evaluated by bilinear interpolation,
// clamped at the boundary.
struct BivariateSurface {
  Eigen::VectorXd grid_x;  // strictly increasing
  Eigen::VectorXd grid_y;
  Eigen::MatrixXd values;  // |grid_x| x |grid_y|

  double eval(double x, double y) const;
  void requireValid() const;
};

// FNV-1a over a byte buffer, used for provenance hashes.
std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hashHex(std::uint64_t h);

}  // namespace profit
