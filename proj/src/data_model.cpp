#include "taskfuse/data_model.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_set>

#include "taskfuse/errors.hpp"
#include "taskfuse/weight_graph.hpp"

namespace taskfuse {

Eigen::Index TaskDataset::total_rows() const {
  Eigen::Index total = 0;
  for (const auto& task : tasks) total += task.y.size();
  return total;
}

void TaskDataset::validate() const {
  if (tasks.empty()) throw ValidationError("dataset has no tasks");
  if (p < 1) throw ValidationError("feature dimension p must be >= 1");
  std::unordered_set<std::string> seen;
  for (const auto& task : tasks) {
    if (!seen.insert(task.id).second)
      throw ValidationError("duplicate task id '" + task.id + "'");
    if (task.X.cols() != p)
      throw ValidationError("task '" + task.id + "' has " +
                            std::to_string(task.X.cols()) +
                            " feature columns, expected " + std::to_string(p));
    if (task.X.rows() != task.y.size())
      throw ValidationError("task '" + task.id + "': X has " +
                            std::to_string(task.X.rows()) + " rows but y has " +
                            std::to_string(task.y.size()));
    if (task.y.size() < 1)
      throw ValidationError("task '" + task.id + "' is empty");
    if (!task.X.allFinite() || !task.y.allFinite())
      throw ValidationError("task '" + task.id + "' contains NaN or Inf");
  }
}

void Hyperparams::validate() const {
  if (!(lambda1 >= 0.0)) throw ValidationError("lambda1 must be >= 0");
  if (!(lambda2 >= 0.0)) throw ValidationError("lambda2 must be >= 0");
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) {
    // trim surrounding whitespace
    size_t a = field.find_first_not_of(" \t");
    size_t b = field.find_last_not_of(" \t");
    fields.push_back(a == std::string::npos ? "" : field.substr(a, b - a + 1));
  }
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

double parse_cell(const std::string& cell, const std::string& path, size_t row,
                  size_t col, const std::string& col_name) {
  const char* begin = cell.c_str();
  char* end = nullptr;
  double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0' || cell.empty())
    throw ValidationError(path + ": row " + std::to_string(row) + ", column " +
                          std::to_string(col + 1) + " (" + col_name +
                          "): non-numeric cell '" + cell + "'");
  if (!std::isfinite(v))
    throw ValidationError(path + ": row " + std::to_string(row) + ", column " +
                          std::to_string(col + 1) + " (" + col_name +
                          "): NaN/Inf not allowed");
  return v;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open file '" + path + "'");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

TaskDataset load_long_format(const std::string& path,
                             const std::vector<std::string>& lines) {
  const auto header = split_csv_line(lines[0]);
  if (header.size() < 3 || header[0] != "task_id" || header[1] != "y")
    throw ValidationError(path +
                          ": long_format header must start with task_id,y "
                          "followed by feature columns");
  const auto p = static_cast<Eigen::Index>(header.size()) - 2;

  // Rows grouped by task id, task order = first appearance.
  std::vector<std::string> order;
  std::map<std::string, std::vector<std::vector<double>>> by_task;
  for (size_t r = 1; r < lines.size(); ++r) {
    if (lines[r].empty()) continue;
    const auto fields = split_csv_line(lines[r]);
    if (fields.size() != header.size())
      throw ValidationError(path + ": row " + std::to_string(r + 1) +
                            ": expected " + std::to_string(header.size()) +
                            " fields, got " + std::to_string(fields.size()));
    std::vector<double> vals(header.size() - 1);
    for (size_t c = 1; c < fields.size(); ++c)
      vals[c - 1] = parse_cell(fields[c], path, r + 1, c, header[c]);
    if (by_task.find(fields[0]) == by_task.end()) order.push_back(fields[0]);
    by_task[fields[0]].push_back(std::move(vals));
  }
  if (order.empty()) throw ValidationError(path + ": no data rows");

  TaskDataset data;
  data.p = p;
  for (const auto& id : order) {
    const auto& rows = by_task[id];
    Task task;
    task.id = id;
    task.X.resize(static_cast<Eigen::Index>(rows.size()), p);
    task.y.resize(static_cast<Eigen::Index>(rows.size()));
    for (size_t i = 0; i < rows.size(); ++i) {
      task.y(static_cast<Eigen::Index>(i)) = rows[i][0];
      for (Eigen::Index j = 0; j < p; ++j)
        task.X(static_cast<Eigen::Index>(i), j) = rows[i][1 + j];
    }
    data.tasks.push_back(std::move(task));
  }
  data.validate();
  return data;
}

TaskDataset load_multi_response(const std::string& path,
                                const std::vector<std::string>& lines) {
  const auto header = split_csv_line(lines[0]);
  // Header is y1..yk then x1..xp.
  size_t k = 0;
  while (k < header.size() && header[k] == "y" + std::to_string(k + 1)) ++k;
  size_t p = 0;
  while (k + p < header.size() && header[k + p] == "x" + std::to_string(p + 1))
    ++p;
  if (k < 1 || p < 1 || k + p != header.size())
    throw ValidationError(
        path + ": multi_response header must be y1..yk,x1..xp");

  std::vector<std::vector<double>> rows;
  for (size_t r = 1; r < lines.size(); ++r) {
    if (lines[r].empty()) continue;
    const auto fields = split_csv_line(lines[r]);
    if (fields.size() != header.size())
      throw ValidationError(path + ": row " + std::to_string(r + 1) +
                            ": expected " + std::to_string(header.size()) +
                            " fields, got " + std::to_string(fields.size()));
    std::vector<double> vals(fields.size());
    for (size_t c = 0; c < fields.size(); ++c)
      vals[c] = parse_cell(fields[c], path, r + 1, c, header[c]);
    rows.push_back(std::move(vals));
  }
  if (rows.empty())
    throw ValidationError(path + ": no data rows (every task is empty)");

  const auto n = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd X(n, static_cast<Eigen::Index>(p));
  for (Eigen::Index i = 0; i < n; ++i)
    for (size_t j = 0; j < p; ++j)
      X(i, static_cast<Eigen::Index>(j)) = rows[static_cast<size_t>(i)][k + j];

  TaskDataset data;
  data.p = static_cast<Eigen::Index>(p);
  for (size_t s = 0; s < k; ++s) {
    Task task;
    task.id = header[s];
    task.X = X;
    task.y.resize(n);
    for (Eigen::Index i = 0; i < n; ++i)
      task.y(i) = rows[static_cast<size_t>(i)][s];
    data.tasks.push_back(std::move(task));
  }
  data.validate();
  return data;
}

}  // namespace

TaskDataset load_csv(const std::string& path, CsvSchema schema) {
  const auto lines = read_lines(path);
  if (lines.empty()) throw ValidationError(path + ": missing header row");
  return schema == CsvSchema::long_format ? load_long_format(path, lines)
                                          : load_multi_response(path, lines);
}

TaskDataset standardize_features(const TaskDataset& data) {
  data.validate();
  const Eigen::Index p = data.p;
  const double n_total = static_cast<double>(data.total_rows());

  Eigen::VectorXd mean = Eigen::VectorXd::Zero(p);
  for (const auto& task : data.tasks) mean += task.X.colwise().sum().transpose();
  mean /= n_total;

  Eigen::VectorXd var = Eigen::VectorXd::Zero(p);
  for (const auto& task : data.tasks)
    var += (task.X.rowwise() - mean.transpose()).array().square().colwise().sum().matrix().transpose();
  var /= n_total;

  TaskDataset out = data;
  for (auto& task : out.tasks) {
    task.X.rowwise() -= mean.transpose();
    for (Eigen::Index j = 0; j < p; ++j) {
      const double sd = std::sqrt(var(j));
      if (sd > 0.0) task.X.col(j) /= sd;
    }
  }
  return out;
}

double eval_objective(const ParamMatrix& theta, const TaskDataset& data,
                      const Hyperparams& hp, const WeightGraph& w) {
  hp.validate();
  const int k = data.task_count();
  if (theta.rows() != data.p || theta.cols() != k)
    throw ValidationError("theta is " + std::to_string(theta.rows()) + "x" +
                          std::to_string(theta.cols()) + ", expected " +
                          std::to_string(data.p) + "x" + std::to_string(k));
  if (w.k != k)
    throw ValidationError("weight graph has k=" + std::to_string(w.k) +
                          ", dataset has k=" + std::to_string(k));

  double loss = 0.0;
  for (int s = 0; s < k; ++s)
    loss += (data.tasks[s].y - data.tasks[s].X * theta.col(s)).squaredNorm();

  double sparsity = 0.0;
  if (hp.sparsity_mode == SparsityMode::elementwise_l1) {
    sparsity = theta.cwiseAbs().sum();
  } else {
    for (Eigen::Index j = 0; j < theta.rows(); ++j)
      sparsity += theta.row(j).norm();
  }

  double fusion = 0.0;
  for (const auto& e : w.edges)
    fusion += e.w * (theta.col(e.s) - theta.col(e.t)).norm();

  return loss + hp.lambda1 * sparsity + hp.lambda2 * fusion;
}

}  // namespace taskfuse
