#include "dataset_io.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace profit {

namespace {

std::vector<std::string> splitLine(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == delim) {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double parseDouble(const std::string& tok, std::size_t row, const std::string& col) {
  try {
    std::size_t used = 0;
    const double v = std::stod(tok, &used);
    if (used != tok.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("cannot parse column '" + col + "' at data row " +
                             std::to_string(row) + ": '" + tok + "'");
  }
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

AxisRescale rescaleToUnit(std::vector<double>& values) {
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  AxisRescale r;
  if (*mx > *mn) {
    r.offset = *mn;
    r.scale = *mx - *mn;
    for (double& v : values) v = (v - r.offset) / r.scale;
  }
  return r;
}

}  // namespace

LongitudinalFunctionalDataset load_csv(const std::string& path, const IngestOptions& opt) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read '" + path + "'");
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string source_hash = hashHex(fnv1a(content.data(), content.size()));

  std::istringstream ss(content);
  std::string line;
  if (!std::getline(ss, line)) throw std::runtime_error("empty file '" + path + "'");
  const auto header = splitLine(line, opt.delimiter);
  int col_id = -1, col_t = -1, col_s = -1, col_y = -1;
  std::vector<std::pair<std::string, int>> covariate_cols;
  for (int c = 0; c < static_cast<int>(header.size()); ++c) {
    const std::string& h = header[c];
    if (h == "subject_id")
      col_id = c;
    else if (h == "t")
      col_t = c;
    else if (h == "s")
      col_s = c;
    else if (h == "y")
      col_y = c;
    else if (std::find(opt.ignore_columns.begin(), opt.ignore_columns.end(), h) ==
             opt.ignore_columns.end())
      covariate_cols.emplace_back(h, c);
  }
  if (col_id < 0 || col_t < 0 || col_s < 0 || col_y < 0)
    throw std::runtime_error("header must contain subject_id,t,s,y (got '" + line + "')");

  struct VisitData {
    std::map<double, double> y_by_s;  // grid point -> value
  };
  struct SubjData {
    std::map<double, VisitData> visits;  // time -> curve
    std::vector<std::pair<std::string, double>> covariates;
  };
  std::vector<std::string> order;
  std::map<std::string, SubjData> subj;

  std::size_t row = 0;
  while (std::getline(ss, line)) {
    ++row;
    if (line.empty()) continue;
    const auto tok = splitLine(line, opt.delimiter);
    if (static_cast<int>(tok.size()) < static_cast<int>(header.size()))
      throw std::runtime_error("data row " + std::to_string(row) + " has too few columns");
    const std::string& id = tok[col_id];
    const double t = parseDouble(tok[col_t], row, "t");
    const double s = parseDouble(tok[col_s], row, "s");
    const double y = parseDouble(tok[col_y], row, "y");
    if (!std::isfinite(t) || !std::isfinite(s))
      throw std::runtime_error("non-finite coordinate at data row " + std::to_string(row));
    if (!std::isfinite(y))
      throw std::runtime_error("non-finite y at data row " + std::to_string(row));

    auto it = subj.find(id);
    if (it == subj.end()) {
      order.push_back(id);
      it = subj.emplace(id, SubjData{}).first;
      for (const auto& [name, c] : covariate_cols)
        it->second.covariates.emplace_back(name, parseDouble(tok[c], row, name));
      std::sort(it->second.covariates.begin(), it->second.covariates.end());
    } else {
      for (const auto& [name, c] : covariate_cols) {
        const double v = parseDouble(tok[c], row, name);
        const auto prev = it->second.covariates;
        for (const auto& [pk, pv] : prev)
          if (pk == name && pv != v)
            throw std::runtime_error("covariate '" + name + "' varies within subject " + id +
                                     " at data row " + std::to_string(row));
      }
    }
    auto& visit = it->second.visits[t];
    if (!visit.y_by_s.emplace(s, y).second)
      throw std::runtime_error("duplicate (subject, t, s) = (" + id + ", " + fmt(t) + ", " +
                               fmt(s) + ") at data row " + std::to_string(row));
  }
  if (order.empty()) throw std::runtime_error("no data rows in '" + path + "'");

  // Establish the shared grid from the first visit, then verify it.
  std::vector<double> grid;
  {
    const auto& first = subj.at(order.front()).visits.begin()->second;
    for (const auto& [s, y] : first.y_by_s) grid.push_back(s);
  }
  for (const auto& id : order) {
    for (const auto& [t, visit] : subj.at(id).visits) {
      if (visit.y_by_s.size() != grid.size())
        throw std::runtime_error("ragged grid: (subject " + id + ", t=" + fmt(t) + ") has " +
                                 std::to_string(visit.y_by_s.size()) + " grid points, expected " +
                                 std::to_string(grid.size()));
      std::size_t g = 0;
      for (const auto& [s, y] : visit.y_by_s) {
        if (s != grid[g])
          throw std::runtime_error("ragged grid: (subject " + id + ", t=" + fmt(t) +
                                   ") grid point " + fmt(s) + " differs from " + fmt(grid[g]));
        ++g;
      }
    }
  }

  std::vector<double> times_all;
  for (const auto& id : order)
    for (const auto& [t, v] : subj.at(id).visits) times_all.push_back(t);

  DatasetMeta meta;
  meta.source = path;
  meta.source_hash = source_hash;
  meta.s_rescale = rescaleToUnit(grid);
  AxisRescale t_re = rescaleToUnit(times_all);
  meta.t_rescale = t_re;

  const int r = static_cast<int>(grid.size());
  std::vector<SubjectRecord> records;
  records.reserve(order.size());
  for (const auto& id : order) {
    const auto& sd = subj.at(id);
    SubjectRecord rec;
    rec.id = id;
    rec.covariates = sd.covariates;
    const int m = static_cast<int>(sd.visits.size());
    rec.times.resize(m);
    rec.curves.resize(m, r);
    int j = 0;
    for (const auto& [t, visit] : sd.visits) {
      rec.times[j] = t_re.scale != 1.0 || t_re.offset != 0.0 ? (t - t_re.offset) / t_re.scale : t;
      int g = 0;
      for (const auto& [s, y] : visit.y_by_s) rec.curves(j, g++) = y;
      ++j;
    }
    records.push_back(std::move(rec));
  }
  Eigen::VectorXd grid_v = Eigen::Map<Eigen::VectorXd>(grid.data(), r);
  LongitudinalFunctionalDataset ds(std::move(grid_v), std::move(records), {0.0, 1.0}, meta);
  ds.requireValid();
  return ds;
}

void save_csv(const LongitudinalFunctionalDataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << "subject_id,t,s,y";
  const auto names = ds.covariateNames();
  for (const auto& n : names) out << ',' << n;
  out << '\n';
  for (const auto& s : ds.subjects()) {
    for (int j = 0; j < s.visits(); ++j)
      for (int g = 0; g < ds.gridSize(); ++g) {
        out << s.id << ',' << fmt(s.times[j]) << ',' << fmt(ds.grid()[g]) << ','
            << fmt(s.curves(j, g));
        for (const auto& n : names) out << ',' << fmt(*s.covariate(n));
        out << '\n';
      }
  }
}

void save_json(const LongitudinalFunctionalDataset& ds, const std::string& path) {
  nlohmann::json j;
  j["format"] = "profit-dataset/1";
  j["grid_s"] = std::vector<double>(ds.grid().data(), ds.grid().data() + ds.gridSize());
  j["domain_t"] = {ds.domainT()[0], ds.domainT()[1]};
  j["meta"] = {{"source", ds.meta().source},
               {"source_hash", ds.meta().source_hash},
               {"s_rescale", {{"offset", ds.meta().s_rescale.offset}, {"scale", ds.meta().s_rescale.scale}}},
               {"t_rescale", {{"offset", ds.meta().t_rescale.offset}, {"scale", ds.meta().t_rescale.scale}}}};
  nlohmann::json subjects = nlohmann::json::array();
  for (const auto& s : ds.subjects()) {
    nlohmann::json js;
    js["id"] = s.id;
    js["times"] = std::vector<double>(s.times.data(), s.times.data() + s.visits());
    nlohmann::json curves = nlohmann::json::array();
    for (int j2 = 0; j2 < s.curves.rows(); ++j2)
      curves.push_back(std::vector<double>(s.curves.row(j2).begin(), s.curves.row(j2).end()));
    js["curves"] = curves;
    nlohmann::json cov = nlohmann::json::object();
    for (const auto& [k, v] : s.covariates) cov[k] = v;
    js["covariates"] = cov;
    subjects.push_back(js);
  }
  j["subjects"] = subjects;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << j.dump(1) << '\n';
}

LongitudinalFunctionalDataset load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read '" + path + "'");
  nlohmann::json j;
  in >> j;
  if (j.value("format", "") != "profit-dataset/1")
    throw std::runtime_error("unrecognized dataset format in '" + path + "'");
  const auto grid = j.at("grid_s").get<std::vector<double>>();
  Eigen::VectorXd grid_v =
      Eigen::Map<const Eigen::VectorXd>(grid.data(), static_cast<int>(grid.size()));
  std::array<double, 2> dom{j.at("domain_t")[0].get<double>(), j.at("domain_t")[1].get<double>()};
  DatasetMeta meta;
  meta.source = j.at("meta").value("source", "");
  meta.source_hash = j.at("meta").value("source_hash", "");
  meta.s_rescale = {j.at("meta").at("s_rescale").at("offset").get<double>(),
                    j.at("meta").at("s_rescale").at("scale").get<double>()};
  meta.t_rescale = {j.at("meta").at("t_rescale").at("offset").get<double>(),
                    j.at("meta").at("t_rescale").at("scale").get<double>()};
  std::vector<SubjectRecord> subjects;
  for (const auto& js : j.at("subjects")) {
    SubjectRecord s;
    s.id = js.at("id").get<std::string>();
    const auto times = js.at("times").get<std::vector<double>>();
    s.times = Eigen::Map<const Eigen::VectorXd>(times.data(), static_cast<int>(times.size()));
    const auto& curves = js.at("curves");
    s.curves.resize(static_cast<int>(curves.size()), static_cast<int>(grid.size()));
    for (int r = 0; r < s.curves.rows(); ++r) {
      const auto row = curves[r].get<std::vector<double>>();
      s.curves.row(r) = Eigen::Map<const Eigen::RowVectorXd>(row.data(), static_cast<int>(row.size()));
    }
    for (const auto& [k, v] : js.at("covariates").items()) s.covariates.emplace_back(k, v.get<double>());
    std::sort(s.covariates.begin(), s.covariates.end());
    subjects.push_back(std::move(s));
  }
  LongitudinalFunctionalDataset ds(std::move(grid_v), std::move(subjects), dom, meta);
  ds.requireValid();
  return ds;
}

}  // namespace profit
