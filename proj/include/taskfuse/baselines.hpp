#pragma once

#include <string>
#include <vector>

#include "taskfuse/data_model.hpp"
#include "taskfuse/path_tree.hpp"
#include "taskfuse/solver.hpp"

namespace taskfuse {

struct LassoFit {
  Eigen::VectorXd beta;
  double objective = 0.0;  // ||y - X beta||^2 + lambda1 ||beta||_1
  int iterations = 0;
  bool converged = false;
};

// Cyclic coordinate descent on ||y - X beta||^2 + lambda1 ||beta||_1 with
// precomputed Gram updates. Deterministic; doubles as the independent oracle
// for the proximal solver.
LassoFit lasso_cd(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                  double lambda1, double tol = 1e-10, int max_iter = 100000);

// Column-wise lasso, one independent fit per task.
ParamMatrix single_task_baseline(const TaskDataset& data, double lambda1);

// Joint fit with the row group penalty lambda1 sum_j ||theta_{j.}||_2 and no
// fusion (empty weight graph), so the same features are selected across all
// tasks.
ParamMatrix nogroup_mtl_baseline(const TaskDataset& data, double lambda1,
                                 const SolverConfig& cfg = {});

// Average-linkage agglomerative clustering on a symmetric distance matrix.
// Ties break toward the lexicographically smallest (i, j) pair; heights are
// the linkage distances.
Dendrogram average_linkage(const Eigen::MatrixXd& dist,
                           const std::vector<std::string>& labels);

// Average-linkage clustering of the coefficient columns with Euclidean
// distance; the post-hoc tree baseline for a separately fitted theta.
Dendrogram post_cluster_single_task(const ParamMatrix& theta);

// Partition tasks by average-linkage on response correlation distance
// (1 - Pearson on aligned responses). Requires equal n_s.
std::vector<std::vector<int>> correlation_groups(const TaskDataset& data,
                                                 int g);

// Cluster tasks into g groups by response correlation, then run the row
// group penalty jointly within each group.
ParamMatrix pregroup_mtl_baseline(const TaskDataset& data, int g,
                                  double lambda1,
                                  const SolverConfig& cfg = {});

}  // namespace taskfuse
