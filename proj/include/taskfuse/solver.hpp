#pragma once

#include <optional>
#include <vector>

#include "taskfuse/data_model.hpp"
#include "taskfuse/prox_ops.hpp"
#include "taskfuse/weight_graph.hpp"

namespace taskfuse {

// iterate_change: ||avg_new - avg_old||_F / max(1, ||avg_old||_F)
// objective_change: |F_new - F_old| / max(1, |F_old|)
enum class TolMetric { iterate_change, objective_change };

// The parallel path runs the per-summand prox evaluations and reflections
// under OpenMP; the serial path is the reference used in tests and the
// kernel benchmark. Both produce bitwise-identical iterates: the averaging
// step accumulates the summand copies in index order per entry, so the
// result does not depend on the thread count.
enum class ExecMode { serial, parallel };

struct SolverConfig {
  double gamma = 1.0;  // prox scaling, sigma = m * gamma
  double mu = 1.0;     // relaxation, in (0, 2)
  int max_iter = 5000;
  double tol = 1e-6;
  TolMetric tol_metric = TolMetric::iterate_change;
  ExecMode exec = ExecMode::parallel;

  void validate() const;
};

// The m auxiliary parameter copies of the decomposition (loss, sparsity, one
// per positive-weight edge) plus their running average.
struct SolverState {
  std::vector<ParamMatrix> copies;
  ParamMatrix average;
  int iteration = 0;
  double last_objective = 0.0;  // maintained for the objective_change metric
};

// Proximal decomposition: each of the m summands of the objective keeps its
// own parameter copy, every iteration applies each summand's prox to its
// copy, averages the results, and reflects the copies through the average.
class ProximalDecomposition {
 public:
  ProximalDecomposition(const TaskDataset& data, const Hyperparams& hp,
                        const WeightGraph& w, const SolverConfig& cfg);

  // Full solve from zero (or the given) initialization.
  FitResult run(const ParamMatrix* init = nullptr) const;

  // Stepwise interface used by tests and the benchmark.
  SolverState init_state(const ParamMatrix* init = nullptr) const;
  // One full iteration; returns the convergence metric for this step.
  double step(SolverState& state) const;

  int summand_count() const { return m_; }
  double sigma() const { return sigma_; }

 private:
  const TaskDataset& data_;
  Hyperparams hp_;
  const WeightGraph& w_;
  SolverConfig cfg_;
  LossProxCache cache_;
  int m_;
  double sigma_;
};

FitResult fit(const TaskDataset& data, const Hyperparams& hp,
              const WeightGraph& w, const SolverConfig& cfg = {},
              const ParamMatrix* init = nullptr);

// fit with every copy and the average initialized from warm.
FitResult fit_warm(const TaskDataset& data, const Hyperparams& hp,
                   const WeightGraph& w, const SolverConfig& cfg,
                   const ParamMatrix& warm);

}  // namespace taskfuse
