#include "taskfuse/path_tree.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "taskfuse/errors.hpp"

namespace taskfuse {

void PathSpec::validate() const {
  if (lambda2_grid.empty()) throw ValidationError("lambda2 grid is empty");
  for (size_t i = 0; i < lambda2_grid.size(); ++i) {
    if (!(lambda2_grid[i] >= 0.0) || !std::isfinite(lambda2_grid[i]))
      throw ValidationError("lambda2 grid values must be finite and >= 0");
    if (i > 0 && !(lambda2_grid[i] > lambda2_grid[i - 1]))
      throw ValidationError("lambda2 grid must be strictly increasing");
  }
  if (!(lambda1 >= 0.0)) throw ValidationError("lambda1 must be >= 0");
  if (!(merge_tol > 0.0)) throw ValidationError("merge_tol must be > 0");
}

std::vector<double> log_spaced(double lo, double hi, int n) {
  if (!(lo > 0.0) || !(hi >= lo))
    throw ValidationError("log_spaced needs 0 < lo <= hi");
  if (n < 1) throw ValidationError("log_spaced needs n >= 1");
  if (n == 1) return {lo};
  std::vector<double> out(static_cast<size_t>(n));
  const double llo = std::log(lo), lhi = std::log(hi);
  for (int i = 0; i < n; ++i)
    out[static_cast<size_t>(i)] =
        std::exp(llo + (lhi - llo) * i / static_cast<double>(n - 1));
  out.front() = lo;
  out.back() = hi;
  return out;
}

namespace {

FitResult fit_path_point(const TaskDataset& data, const WeightGraph& w,
                         const PathSpec& spec, const SolverConfig& cfg,
                         double lambda2, const ParamMatrix* warm) {
  Hyperparams hp;
  hp.lambda1 = spec.lambda1;
  hp.lambda2 = lambda2;
  try {
    return warm ? fit_warm(data, hp, w, cfg, *warm) : fit(data, hp, w, cfg);
  } catch (const SolverDivergenceError& e) {
    std::ostringstream msg;
    msg << "at lambda2=" << lambda2 << ": " << e.what();
    throw SolverDivergenceError(msg.str(), e.iteration());
  }
}

// Connected components of the thresholded distance graph; returns component
// label per task, labels numbered by first appearance.
std::vector<int> threshold_components(const Eigen::MatrixXd& dist,
                                      double merge_tol) {
  const int k = static_cast<int>(dist.rows());
  std::vector<int> parent(static_cast<size_t>(k));
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int a) {
    while (parent[static_cast<size_t>(a)] != a) {
      parent[static_cast<size_t>(a)] =
          parent[static_cast<size_t>(parent[static_cast<size_t>(a)])];
      a = parent[static_cast<size_t>(a)];
    }
    return a;
  };
  for (int s = 0; s < k; ++s)
    for (int t = s + 1; t < k; ++t)
      if (dist(s, t) <= merge_tol) {
        const int rs = find(s), rt = find(t);
        if (rs != rt) parent[static_cast<size_t>(std::max(rs, rt))] =
            std::min(rs, rt);
      }
  std::vector<int> label(static_cast<size_t>(k), -1);
  int next = 0;
  for (int s = 0; s < k; ++s) {
    const int r = find(s);
    if (label[static_cast<size_t>(r)] < 0) label[static_cast<size_t>(r)] = next++;
    label[static_cast<size_t>(s)] = label[static_cast<size_t>(r)];
  }
  return label;
}

int component_count(const ParamMatrix& theta, double merge_tol) {
  const auto d = normalized_distances(0.0, theta);
  const auto label = threshold_components(d.dist, merge_tol);
  return 1 + *std::max_element(label.begin(), label.end());
}

}  // namespace

std::vector<PathPoint> compute_path(const TaskDataset& data,
                                    const WeightGraph& w, const PathSpec& spec,
                                    const SolverConfig& cfg) {
  spec.validate();
  std::vector<PathPoint> path;
  path.reserve(spec.lambda2_grid.size());
  const ParamMatrix* warm = nullptr;
  for (const double lambda2 : spec.lambda2_grid) {
    PathPoint pt;
    pt.lambda2 = lambda2;
    pt.fit = fit_path_point(data, w, spec, cfg, lambda2, warm);
    path.push_back(std::move(pt));
    warm = &path.back().fit.theta;
  }
  return path;
}

std::vector<PathPoint> compute_path_auto(const TaskDataset& data,
                                         const WeightGraph& w,
                                         const PathSpec& spec,
                                         const SolverConfig& cfg, double cap) {
  auto path = compute_path(data, w, spec, cfg);
  while (component_count(path.back().fit.theta, spec.merge_tol) > 1) {
    const double last = path.back().lambda2;
    const double next = last > 0.0 ? 2.0 * last : 1.0;
    if (next > cap) break;
    PathPoint pt;
    pt.lambda2 = next;
    pt.fit = fit_path_point(data, w, spec, cfg, next, &path.back().fit.theta);
    path.push_back(std::move(pt));
  }
  return path;
}

PathDistances normalized_distances(double lambda2, const ParamMatrix& theta) {
  const int k = static_cast<int>(theta.cols());
  PathDistances out;
  out.lambda2 = lambda2;
  out.dist = Eigen::MatrixXd::Zero(k, k);
  const double scale = std::sqrt(static_cast<double>(theta.rows()));
  for (int s = 0; s < k; ++s)
    for (int t = s + 1; t < k; ++t) {
      const double d = (theta.col(s) - theta.col(t)).norm() / scale;
      out.dist(s, t) = d;
      out.dist(t, s) = d;
    }
  return out;
}

Dendrogram extract_tree(const std::vector<PathDistances>& path,
                        double merge_tol,
                        const std::vector<std::string>& leaf_ids) {
  if (path.empty()) throw ValidationError("path is empty");
  if (!(merge_tol > 0.0)) throw ValidationError("merge_tol must be > 0");
  const int k = static_cast<int>(leaf_ids.size());
  for (const auto& pt : path)
    if (pt.dist.rows() != k || pt.dist.cols() != k)
      throw ValidationError("path distance matrix does not match leaf count");

  Dendrogram tree;
  tree.leaves = leaf_ids;

  // Persistent clusters under monotone closure. cluster_of[t] = current
  // cluster index into `clusters`; each cluster tracks its dendrogram node
  // id and smallest member.
  struct Cluster {
    int node;
    int smallest;
    bool alive = true;
  };
  std::vector<Cluster> clusters;
  std::vector<int> cluster_of(static_cast<size_t>(k));
  for (int t = 0; t < k; ++t) {
    clusters.push_back({t, t, true});
    cluster_of[static_cast<size_t>(t)] = t;
  }

  // Raw (closure-free) co-membership history for split diagnostics.
  std::vector<std::vector<bool>> ever_together(
      static_cast<size_t>(k), std::vector<bool>(static_cast<size_t>(k), false));

  for (const auto& pt : path) {
    const auto raw = threshold_components(pt.dist, merge_tol);
    for (int s = 0; s < k; ++s)
      for (int t = s + 1; t < k; ++t) {
        const bool together = raw[static_cast<size_t>(s)] ==
                              raw[static_cast<size_t>(t)];
        if (together)
          ever_together[static_cast<size_t>(s)][static_cast<size_t>(t)] = true;
        else if (ever_together[static_cast<size_t>(s)][static_cast<size_t>(t)])
          tree.raw_splits.push_back({pt.lambda2, s, t});
      }

    // Components over tasks, seeded with the already-merged clusters so
    // closure can only coarsen.
    Eigen::MatrixXd closed = pt.dist;
    for (int s = 0; s < k; ++s)
      for (int t = s + 1; t < k; ++t)
        if (cluster_of[static_cast<size_t>(s)] ==
            cluster_of[static_cast<size_t>(t)])
          closed(s, t) = 0.0;
    const auto label = threshold_components(closed, merge_tol);

    const int ncomp = 1 + *std::max_element(label.begin(), label.end());
    for (int comp = 0; comp < ncomp; ++comp) {
      // Distinct clusters inside this component, ordered by smallest member.
      std::vector<int> members;
      for (int t = 0; t < k; ++t)
        if (label[static_cast<size_t>(t)] == comp) {
          const int c = cluster_of[static_cast<size_t>(t)];
          if (std::find(members.begin(), members.end(), c) == members.end())
            members.push_back(c);
        }
      if (members.size() < 2) continue;
      std::sort(members.begin(), members.end(), [&](int a, int b) {
        return clusters[static_cast<size_t>(a)].smallest <
               clusters[static_cast<size_t>(b)].smallest;
      });
      int acc = members[0];
      for (size_t i = 1; i < members.size(); ++i) {
        const int other = members[i];
        const int node = k + static_cast<int>(tree.merges.size());
        tree.merges.push_back({pt.lambda2,
                               clusters[static_cast<size_t>(acc)].node,
                               clusters[static_cast<size_t>(other)].node,
                               node});
        Cluster merged{node,
                       std::min(clusters[static_cast<size_t>(acc)].smallest,
                                clusters[static_cast<size_t>(other)].smallest),
                       true};
        clusters[static_cast<size_t>(acc)].alive = false;
        clusters[static_cast<size_t>(other)].alive = false;
        clusters.push_back(merged);
        const int cid = static_cast<int>(clusters.size()) - 1;
        for (int t = 0; t < k; ++t)
          if (cluster_of[static_cast<size_t>(t)] == acc ||
              cluster_of[static_cast<size_t>(t)] == other)
            cluster_of[static_cast<size_t>(t)] = cid;
        acc = cid;
      }
    }
  }
  return tree;
}

Dendrogram extract_tree(const std::vector<PathPoint>& path, double merge_tol,
                        const std::vector<std::string>& leaf_ids) {
  std::vector<PathDistances> dists;
  dists.reserve(path.size());
  for (const auto& pt : path)
    dists.push_back(normalized_distances(pt.lambda2, pt.fit.theta));
  return extract_tree(dists, merge_tol, leaf_ids);
}

std::vector<std::vector<int>> cut_tree(const Dendrogram& tree, int g) {
  const int k = static_cast<int>(tree.leaves.size());
  if (g < 1 || g > k)
    throw ValidationError("cut requires 1 <= g <= k, got g=" +
                          std::to_string(g));
  const int apply = k - g;
  if (static_cast<int>(tree.merges.size()) < apply)
    throw ValidationError(
        "tree has only " + std::to_string(tree.merges.size()) +
        " merges; cutting to g=" + std::to_string(g) + " clusters needs " +
        std::to_string(apply) + " (path did not merge far enough)");

  std::vector<std::vector<int>> members(static_cast<size_t>(k));
  std::vector<bool> active(static_cast<size_t>(k) + tree.merges.size(), false);
  for (int t = 0; t < k; ++t) {
    members[static_cast<size_t>(t)] = {t};
    active[static_cast<size_t>(t)] = true;
  }
  for (int e = 0; e < apply; ++e) {
    const auto& ev = tree.merges[static_cast<size_t>(e)];
    std::vector<int> joined = members[static_cast<size_t>(ev.left)];
    const auto& right = members[static_cast<size_t>(ev.right)];
    joined.insert(joined.end(), right.begin(), right.end());
    std::sort(joined.begin(), joined.end());
    members.push_back(std::move(joined));
    active[static_cast<size_t>(ev.left)] = false;
    active[static_cast<size_t>(ev.right)] = false;
    active[static_cast<size_t>(ev.id)] = true;
  }
  std::vector<std::vector<int>> out;
  for (size_t i = 0; i < members.size(); ++i)
    if (active[i]) out.push_back(members[i]);
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a[0] < b[0]; });
  return out;
}

std::string dendrogram_to_json(const Dendrogram& tree) {
  nlohmann::json j;
  j["leaves"] = tree.leaves;
  j["merges"] = nlohmann::json::array();
  for (const auto& m : tree.merges)
    j["merges"].push_back({{"height", m.height},
                           {"left", m.left},
                           {"right", m.right},
                           {"id", m.id}});
  j["raw_splits"] = nlohmann::json::array();
  for (const auto& s : tree.raw_splits)
    j["raw_splits"].push_back(
        {{"lambda2", s.lambda2}, {"task_a", s.task_a}, {"task_b", s.task_b}});
  return j.dump(2);
}

Dendrogram dendrogram_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    Dendrogram tree;
    tree.leaves = j.at("leaves").get<std::vector<std::string>>();
    for (const auto& m : j.at("merges"))
      tree.merges.push_back({m.at("height").get<double>(),
                             m.at("left").get<int>(),
                             m.at("right").get<int>(), m.at("id").get<int>()});
    if (j.contains("raw_splits"))
      for (const auto& s : j["raw_splits"])
        tree.raw_splits.push_back({s.at("lambda2").get<double>(),
                                   s.at("task_a").get<int>(),
                                   s.at("task_b").get<int>()});
    return tree;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad dendrogram JSON: ") + e.what());
  }
}

namespace {

std::string newick_label(const std::string& name) {
  if (name.find_first_of(" (),:;'\t[]") == std::string::npos) return name;
  std::string quoted = "'";
  for (const char c : name) {
    quoted += c;
    if (c == '\'') quoted += '\'';
  }
  quoted += '\'';
  return quoted;
}

std::string format_length(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string dendrogram_to_newick(const Dendrogram& tree) {
  const int k = static_cast<int>(tree.leaves.size());
  double h0 = 0.0;
  for (const auto& m : tree.merges)
    if (m.height > 0.0) {
      h0 = m.height;
      break;
    }
  // Height on the log scale, with everything at or below the first positive
  // merge height pinned to that height (leaves included).
  auto log_height = [&](double h) {
    if (h0 <= 0.0) return 0.0;
    return std::log(std::max(h, h0));
  };

  std::vector<double> height(static_cast<size_t>(k) + tree.merges.size(), 0.0);
  std::vector<bool> is_child(height.size(), false);
  for (const auto& m : tree.merges) {
    height[static_cast<size_t>(m.id)] = m.height;
    is_child[static_cast<size_t>(m.left)] = true;
    is_child[static_cast<size_t>(m.right)] = true;
  }

  std::function<std::string(int, double)> render = [&](int node,
                                                       double parent_lh) {
    const double lh = node < k ? log_height(0.0)
                               : log_height(height[static_cast<size_t>(node)]);
    std::string body;
    if (node < k) {
      body = newick_label(tree.leaves[static_cast<size_t>(node)]);
    } else {
      const auto& m = tree.merges[static_cast<size_t>(node - k)];
      body = "(" + render(m.left, lh) + "," + render(m.right, lh) + ")";
    }
    return body + ":" + format_length(std::max(0.0, parent_lh - lh));
  };

  std::vector<int> roots;
  for (size_t i = 0; i < height.size(); ++i)
    if (!is_child[i]) roots.push_back(static_cast<int>(i));

  double top = h0;
  for (const auto& m : tree.merges) top = std::max(top, m.height);
  const double top_lh = log_height(top);

  if (roots.size() == 1) {
    const int r = roots[0];
    if (r < k) return newick_label(tree.leaves[static_cast<size_t>(r)]) + ";";
    const auto& m = tree.merges[static_cast<size_t>(r - k)];
    const double lh = log_height(m.height);
    return "(" + render(m.left, lh) + "," + render(m.right, lh) + ");";
  }
  // Incomplete tree: join the remaining roots under an unlabeled top node.
  std::string body = "(";
  for (size_t i = 0; i < roots.size(); ++i) {
    if (i) body += ",";
    body += render(roots[i], top_lh);
  }
  return body + ");";
}

}  // namespace taskfuse
