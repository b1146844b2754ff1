#include "taskfuse/weight_graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "taskfuse/errors.hpp"

namespace taskfuse {

void WeightGraph::validate() const {
  if (k < 1) throw ValidationError("weight graph needs k >= 1 tasks");
  const WeightEdge* prev = nullptr;
  for (const auto& e : edges) {
    if (e.s < 0 || e.t >= k)
      throw ValidationError("edge (" + std::to_string(e.s) + "," +
                            std::to_string(e.t) + ") out of range for k=" +
                            std::to_string(k));
    if (e.s >= e.t)
      throw ValidationError("edge (" + std::to_string(e.s) + "," +
                            std::to_string(e.t) + ") must have s < t");
    if (!(e.w > 0.0) || !std::isfinite(e.w))
      throw ValidationError("edge (" + std::to_string(e.s) + "," +
                            std::to_string(e.t) +
                            ") has non-positive or non-finite weight");
    if (prev && !(prev->s < e.s || (prev->s == e.s && prev->t < e.t)))
      throw ValidationError("edges must be sorted by (s,t) without duplicates");
    prev = &e;
  }
}

WeightGraph uniform_weights(int k) {
  if (k < 1) throw ValidationError("uniform_weights needs k >= 1");
  WeightGraph g;
  g.k = k;
  for (int s = 0; s < k; ++s)
    for (int t = s + 1; t < k; ++t) g.edges.push_back({s, t, 1.0});
  return g;
}

WeightGraph knn_weights(const TaskDataset& data, int kappa, double phi) {
  data.validate();
  const int k = data.task_count();
  if (kappa < 1 || kappa > k - 1)
    throw ValidationError("kappa must be in [1, k-1], got " +
                          std::to_string(kappa));
  if (phi < 0.0) throw ValidationError("phi must be >= 0");
  const Eigen::Index n = data.tasks[0].y.size();
  for (const auto& task : data.tasks)
    if (task.y.size() != n)
      throw ValidationError(
          "knn_weights requires equal sample counts across tasks; task '" +
          task.id + "' has " + std::to_string(task.y.size()) + " rows, not " +
          std::to_string(n));

  Eigen::MatrixXd d2(k, k);
  for (int s = 0; s < k; ++s) {
    d2(s, s) = 0.0;
    for (int t = s + 1; t < k; ++t) {
      const double v = (data.tasks[s].y - data.tasks[t].y).squaredNorm();
      d2(s, t) = v;
      d2(t, s) = v;
    }
  }

  // t is a neighbour of s if it ranks among the kappa smallest distances from
  // s; ties resolve toward the lower task index.
  std::set<std::pair<int, int>> pairs;
  for (int s = 0; s < k; ++s) {
    std::vector<int> others;
    for (int t = 0; t < k; ++t)
      if (t != s) others.push_back(t);
    std::sort(others.begin(), others.end(), [&](int a, int b) {
      if (d2(s, a) != d2(s, b)) return d2(s, a) < d2(s, b);
      return a < b;
    });
    for (int r = 0; r < kappa; ++r) {
      const int t = others[static_cast<size_t>(r)];
      pairs.insert({std::min(s, t), std::max(s, t)});
    }
  }

  WeightGraph g;
  g.k = k;
  for (const auto& [s, t] : pairs)
    g.edges.push_back({s, t, std::exp(-phi * d2(s, t))});
  g.validate();
  return g;
}

WeightGraph load_weights(const std::string& path, int k) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open file '" + path + "'");

  WeightGraph g;
  g.k = k;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    std::stringstream ss(line);
    std::string f0, f1, f2, extra;
    if (!std::getline(ss, f0, ',') || !std::getline(ss, f1, ',') ||
        !std::getline(ss, f2, ',') || std::getline(ss, extra, ','))
      throw ValidationError(path + ": line " + std::to_string(lineno) +
                            ": expected exactly 3 fields `s,t,w`");

    char* end = nullptr;
    const long s = std::strtol(f0.c_str(), &end, 10);
    if (end == f0.c_str() || *end != '\0') {
      if (lineno == 1) continue;  // header line
      throw ValidationError(path + ": line " + std::to_string(lineno) +
                            ": non-integer task index '" + f0 + "'");
    }
    const long t = std::strtol(f1.c_str(), &end, 10);
    if (end == f1.c_str() || *end != '\0')
      throw ValidationError(path + ": line " + std::to_string(lineno) +
                            ": non-integer task index '" + f1 + "'");
    const double w = std::strtod(f2.c_str(), &end);
    if (end == f2.c_str() || *end != '\0' || !std::isfinite(w))
      throw ValidationError(path + ": line " + std::to_string(lineno) +
                            ": non-numeric weight '" + f2 + "'");

    if (s < 0 || t >= k)
      throw ValidationError(path + ": line " + std::to_string(lineno) +
                            ": pair (" + f0 + "," + f1 +
                            ") out of range for k=" + std::to_string(k));
    if (s >= t)
      throw ValidationError(path + ": line " + std::to_string(lineno) +
                            ": pair must satisfy s < t");
    if (w < 0.0)
      throw ValidationError(path + ": line " + std::to_string(lineno) +
                            ": negative weight");
    if (w == 0.0) continue;
    g.edges.push_back({static_cast<int>(s), static_cast<int>(t), w});
  }

  std::sort(g.edges.begin(), g.edges.end(), [](const auto& a, const auto& b) {
    return a.s < b.s || (a.s == b.s && a.t < b.t);
  });
  for (size_t i = 1; i < g.edges.size(); ++i)
    if (g.edges[i - 1].s == g.edges[i].s && g.edges[i - 1].t == g.edges[i].t)
      throw ValidationError(path + ": duplicate pair (" +
                            std::to_string(g.edges[i].s) + "," +
                            std::to_string(g.edges[i].t) + ")");
  g.validate();
  return g;
}

}  // namespace taskfuse
