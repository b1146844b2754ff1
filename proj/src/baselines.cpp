#include "taskfuse/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "taskfuse/errors.hpp"

namespace taskfuse {

LassoFit lasso_cd(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                  double lambda1, double tol, int max_iter) {
  if (X.rows() != y.size())
    throw ValidationError("lasso_cd: X has " + std::to_string(X.rows()) +
                          " rows, y has " + std::to_string(y.size()));
  if (!(lambda1 >= 0.0)) throw ValidationError("lambda1 must be >= 0");
  if (!(tol > 0.0) || max_iter < 1)
    throw ValidationError("lasso_cd needs tol > 0 and max_iter >= 1");

  const Eigen::Index p = X.cols();
  const Eigen::MatrixXd G = X.transpose() * X;
  const Eigen::VectorXd c = X.transpose() * y;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd q = Eigen::VectorXd::Zero(p);  // G * beta
  const double thr = lambda1 / 2.0;

  LassoFit out;
  out.converged = false;
  int sweep = 0;
  for (; sweep < max_iter; ++sweep) {
    double max_delta = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      if (G(j, j) <= 0.0) continue;
      const double z = c(j) - q(j) + G(j, j) * beta(j);
      double b = 0.0;
      if (z > thr)
        b = (z - thr) / G(j, j);
      else if (z < -thr)
        b = (z + thr) / G(j, j);
      const double delta = b - beta(j);
      if (delta != 0.0) {
        q += G.col(j) * delta;
        beta(j) = b;
        max_delta = std::max(max_delta, std::abs(delta));
      }
    }
    if (max_delta < tol) {
      out.converged = true;
      ++sweep;
      break;
    }
  }
  out.beta = beta;
  out.iterations = sweep;
  out.objective = (y - X * beta).squaredNorm() + lambda1 * beta.lpNorm<1>();
  return out;
}

ParamMatrix single_task_baseline(const TaskDataset& data, double lambda1) {
  data.validate();
  const int k = data.task_count();
  ParamMatrix theta(data.p, k);
#pragma omp parallel for schedule(dynamic)
  for (int s = 0; s < k; ++s)
    theta.col(s) = lasso_cd(data.tasks[static_cast<size_t>(s)].X,
                            data.tasks[static_cast<size_t>(s)].y, lambda1)
                       .beta;
  return theta;
}

ParamMatrix nogroup_mtl_baseline(const TaskDataset& data, double lambda1,
                                 const SolverConfig& cfg) {
  Hyperparams hp;
  hp.lambda1 = lambda1;
  hp.lambda2 = 0.0;
  hp.sparsity_mode = SparsityMode::row_group_l21;
  WeightGraph w;
  w.k = data.task_count();
  return fit(data, hp, w, cfg).theta;
}

Dendrogram average_linkage(const Eigen::MatrixXd& dist,
                           const std::vector<std::string>& labels) {
  const int k = static_cast<int>(labels.size());
  if (k < 1) throw ValidationError("average_linkage needs at least one label");
  if (dist.rows() != k || dist.cols() != k)
    throw ValidationError("distance matrix does not match label count");
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      if (!std::isfinite(dist(i, j)) || dist(i, j) < 0.0)
        throw ValidationError("distances must be finite and >= 0");
      if (std::abs(dist(i, j) - dist(j, i)) > 0.0)
        throw ValidationError("distance matrix must be symmetric");
    }

  struct Cluster {
    int node;
    int smallest;
    int size;
    bool alive;
  };
  std::vector<Cluster> cl;
  for (int i = 0; i < k; ++i) cl.push_back({i, i, 1, true});
  Eigen::MatrixXd D = dist;  // indexed by slot in cl

  Dendrogram tree;
  tree.leaves = labels;
  for (int step = 0; step + 1 < k; ++step) {
    // Best alive pair; ties toward the smaller (smallest-member) index pair.
    int bi = -1, bj = -1;
    double best = std::numeric_limits<double>::infinity();
    std::vector<int> order;
    for (int i = 0; i < static_cast<int>(cl.size()); ++i)
      if (cl[static_cast<size_t>(i)].alive) order.push_back(i);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      return cl[static_cast<size_t>(a)].smallest <
             cl[static_cast<size_t>(b)].smallest;
    });
    for (size_t a = 0; a < order.size(); ++a)
      for (size_t b = a + 1; b < order.size(); ++b)
        if (D(order[a], order[b]) < best) {
          best = D(order[a], order[b]);
          bi = order[a];
          bj = order[b];
        }

    const int node = k + static_cast<int>(tree.merges.size());
    tree.merges.push_back({best, cl[static_cast<size_t>(bi)].node,
                           cl[static_cast<size_t>(bj)].node, node});

    // Grow D by the merged cluster's average-linkage row.
    const int ni = cl[static_cast<size_t>(bi)].size;
    const int nj = cl[static_cast<size_t>(bj)].size;
    const int slot = static_cast<int>(cl.size());
    Eigen::MatrixXd D2 = Eigen::MatrixXd::Zero(slot + 1, slot + 1);
    D2.topLeftCorner(slot, slot) = D;
    for (int o = 0; o < slot; ++o) {
      const double v = (ni * D(bi, o) + nj * D(bj, o)) / (ni + nj);
      D2(slot, o) = v;
      D2(o, slot) = v;
    }
    D = std::move(D2);
    cl.push_back({node,
                  std::min(cl[static_cast<size_t>(bi)].smallest,
                           cl[static_cast<size_t>(bj)].smallest),
                  ni + nj, true});
    cl[static_cast<size_t>(bi)].alive = false;
    cl[static_cast<size_t>(bj)].alive = false;
  }
  return tree;
}

Dendrogram post_cluster_single_task(const ParamMatrix& theta) {
  if (!theta.allFinite())
    throw ValidationError("theta contains NaN or Inf");
  const int k = static_cast<int>(theta.cols());
  Eigen::MatrixXd dist = Eigen::MatrixXd::Zero(k, k);
  std::vector<std::string> labels;
  for (int s = 0; s < k; ++s) {
    labels.push_back(std::to_string(s));
    for (int t = s + 1; t < k; ++t) {
      const double d = (theta.col(s) - theta.col(t)).norm();
      dist(s, t) = d;
      dist(t, s) = d;
    }
  }
  return average_linkage(dist, labels);
}

std::vector<std::vector<int>> correlation_groups(const TaskDataset& data,
                                                 int g) {
  data.validate();
  const int k = data.task_count();
  if (g < 1 || g > k)
    throw ValidationError("group count must be in [1, k], got " +
                          std::to_string(g));
  const Eigen::Index n = data.tasks[0].y.size();
  for (const auto& task : data.tasks)
    if (task.y.size() != n)
      throw ValidationError(
          "correlation grouping requires equal sample counts; task '" +
          task.id + "' differs");

  Eigen::MatrixXd centered(n, k);
  for (int s = 0; s < k; ++s) {
    const auto& y = data.tasks[static_cast<size_t>(s)].y;
    centered.col(s) = y.array() - y.mean();
  }
  Eigen::MatrixXd dist = Eigen::MatrixXd::Zero(k, k);
  std::vector<std::string> labels;
  for (int s = 0; s < k; ++s) {
    labels.push_back(data.tasks[static_cast<size_t>(s)].id);
    for (int t = s + 1; t < k; ++t) {
      const double den = centered.col(s).norm() * centered.col(t).norm();
      const double corr =
          den > 0.0 ? centered.col(s).dot(centered.col(t)) / den : 0.0;
      dist(s, t) = 1.0 - corr;
      dist(t, s) = dist(s, t);
    }
  }
  return cut_tree(average_linkage(dist, labels), g);
}

ParamMatrix pregroup_mtl_baseline(const TaskDataset& data, int g,
                                  double lambda1, const SolverConfig& cfg) {
  const auto groups = correlation_groups(data, g);
  ParamMatrix theta = ParamMatrix::Zero(data.p, data.task_count());
  for (const auto& group : groups) {
    TaskDataset sub;
    sub.p = data.p;
    for (const int s : group)
      sub.tasks.push_back(data.tasks[static_cast<size_t>(s)]);
    const ParamMatrix part = nogroup_mtl_baseline(sub, lambda1, cfg);
    for (size_t i = 0; i < group.size(); ++i)
      theta.col(group[i]) = part.col(static_cast<Eigen::Index>(i));
  }
  return theta;
}

}  // namespace taskfuse
