#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace taskfuse {

// Coefficient matrix, p features x k tasks. Column s holds the parameters of
// task s; every update in the solver acts on whole columns.
using ParamMatrix = Eigen::MatrixXd;

struct Task {
  std::string id;
  Eigen::MatrixXd X;  // n_s x p
  Eigen::VectorXd y;  // n_s
};

// Per-task designs and responses sharing a single feature dimension p.
// Immutable after construction by convention; safe to share across threads.
struct TaskDataset {
  std::vector<Task> tasks;
  Eigen::Index p = 0;

  int task_count() const { return static_cast<int>(tasks.size()); }
  Eigen::Index total_rows() const;

  // Checks shared p, matching X/y row counts, unique ids, finite entries.
  void validate() const;
};

enum class SparsityMode { elementwise_l1, row_group_l21 };

struct Hyperparams {
  double lambda1 = 0.0;  // sparsity strength
  double lambda2 = 0.0;  // fusion strength
  SparsityMode sparsity_mode = SparsityMode::elementwise_l1;

  void validate() const;
};

struct FitResult {
  ParamMatrix theta;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> residual_history;
};

enum class CsvSchema { long_format, multi_response };

// long_format: header `task_id,y,x1..xp`, rows grouped by task id (order of
// first appearance). multi_response: header `y1..yk,x1..xp`, one shared X
// expanded into k tasks. NaN/Inf cells are rejected.
TaskDataset load_csv(const std::string& path, CsvSchema schema);

// Rescales every feature to zero mean and unit variance across the pooled
// rows of all tasks. Constant features are centered only.
TaskDataset standardize_features(const TaskDataset& data);

struct WeightGraph;

// sum_s ||y_s - X_s theta_s||^2 + lambda1 * (sparsity term)
//   + lambda2 * sum_{s<t} w_st ||theta_s - theta_t||_2
// where the sparsity term is the entrywise l1 norm of theta, or the sum of
// row l2 norms in row_group_l21 mode.
double eval_objective(const ParamMatrix& theta, const TaskDataset& data,
                      const Hyperparams& hp, const WeightGraph& w);

}  // namespace taskfuse
