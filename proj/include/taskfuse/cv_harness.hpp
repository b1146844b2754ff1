#pragma once

#include <string>
#include <vector>

#include "taskfuse/data_model.hpp"
#include "taskfuse/solver.hpp"
#include "taskfuse/synth.hpp"
#include "taskfuse/weight_graph.hpp"

namespace taskfuse {

// Root mean squared residual pooled over all tasks' rows.
double rmse(const ParamMatrix& theta, const TaskDataset& data);

struct SelectionResult {
  Hyperparams hp;
  ParamMatrix theta;  // trained on train at the selected pair
  double val_rmse = 0.0;
};

// Fits every (lambda1, lambda2) pair on train (warm-started along each
// lambda2 sweep), evaluates on val, and returns the pair with the smallest
// validation RMSE. Ties break toward larger lambda1, then larger lambda2.
SelectionResult select_hyperparams(const TaskDataset& train,
                                   const TaskDataset& val,
                                   const WeightGraph& w,
                                   const std::vector<double>& grid1,
                                   const std::vector<double>& grid2,
                                   const SolverConfig& cfg);

// 10 log-spaced points in [0.01, 10] * max_s ||X_s' y_s||_inf / n_s.
std::vector<double> default_lambda1_grid(const TaskDataset& train);

// {0} plus log-spaced points spanning the same data scale as the
// lambda1 grid, stretched upward so full fusion is reachable.
std::vector<double> default_lambda2_grid(const TaskDataset& train);

enum class Method { ours, single_task, nogroup, pregroup };

Method method_from_string(const std::string& name);
std::string method_name(Method m);

struct BenchmarkRow {
  std::string method;
  int kappa = 0;  // 0 when k-NN weights were not used
  double mean_rmse = 0.0;
  double std_rmse = 0.0;   // across repeats
  double mean_seconds = 0.0;
};

struct BenchmarkReport {
  std::vector<BenchmarkRow> rows;

  std::string to_csv() const;
  std::string to_text() const;  // aligned table
};

struct BenchmarkOptions {
  int kappa = 4;
  // Weight decay for the k-NN affinities. At the generator's default scale
  // this puts within-group edges near exp(-2) and leaves more distant pairs
  // heavily damped, which is what makes the kappa sweep flat.
  double phi = 0.05;
  bool kappa_sweep = false;  // sweep kappa over {2,3,4,5,6} for ours
  // Selection-grade solver settings; final reported fits do not need the
  // library-default 1e-6 tolerance and the smaller gamma converges faster
  // at this problem scale.
  SolverConfig cfg{.gamma = 0.05, .tol = 1e-5};
};

// Regenerates the synthetic suite `repeats` times (seeds spec.seed,
// spec.seed+1, ...), tunes every method on the validation set, and reports
// pooled test RMSE per method. Timing covers selection and evaluation, not
// data generation.
BenchmarkReport benchmark(const SynthSpec& spec, int repeats,
                          const std::vector<Method>& methods,
                          const BenchmarkOptions& opts = {});

}  // namespace taskfuse
