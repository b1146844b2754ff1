#include "taskfuse/solver.hpp"

#include <algorithm>
#include <cmath>

#include "taskfuse/errors.hpp"

namespace taskfuse {

void SolverConfig::validate() const {
  if (!(gamma > 0.0)) throw ValidationError("gamma must be > 0");
  if (!(mu > 0.0 && mu < 2.0)) throw ValidationError("mu must be in (0, 2)");
  if (max_iter < 1) throw ValidationError("max_iter must be >= 1");
  if (!(tol > 0.0)) throw ValidationError("tol must be > 0");
}

ProximalDecomposition::ProximalDecomposition(const TaskDataset& data,
                                             const Hyperparams& hp,
                                             const WeightGraph& w,
                                             const SolverConfig& cfg)
    : data_(data), hp_(hp), w_(w), cfg_(cfg) {
  data_.validate();
  hp_.validate();
  w_.validate();
  cfg_.validate();
  if (w_.k != data_.task_count())
    throw ValidationError("weight graph has k=" + std::to_string(w_.k) +
                          ", dataset has k=" +
                          std::to_string(data_.task_count()));
  m_ = 2 + static_cast<int>(w_.edges.size());
  sigma_ = m_ * cfg_.gamma;
  cache_ = LossProxCache(data_, sigma_);
}

SolverState ProximalDecomposition::init_state(const ParamMatrix* init) const {
  const Eigen::Index p = data_.p;
  const int k = data_.task_count();
  ParamMatrix start;
  if (init) {
    if (init->rows() != p || init->cols() != k)
      throw ValidationError(
          "init is " + std::to_string(init->rows()) + "x" +
          std::to_string(init->cols()) + ", expected " + std::to_string(p) +
          "x" + std::to_string(k));
    start = *init;
  } else {
    start = ParamMatrix::Zero(p, k);
  }
  SolverState st;
  st.copies.assign(static_cast<size_t>(m_), start);
  st.average = std::move(start);
  st.iteration = 0;
  st.last_objective = eval_objective(st.average, data_, hp_, w_);
  return st;
}

double ProximalDecomposition::step(SolverState& state) const {
  const int m = m_;
  const int k = data_.task_count();
  const bool par = cfg_.exec == ExecMode::parallel;
  std::vector<ParamMatrix> prox(static_cast<size_t>(m));

#pragma omp parallel for schedule(dynamic) if (par)
  for (int i = 0; i < m; ++i) {
    const ParamMatrix& b = state.copies[static_cast<size_t>(i)];
    if (i == 0) {
      prox[0] = prox_loss(b, cache_);
    } else if (i == 1) {
      prox[1] = prox_sparsity(b, hp_.lambda1, sigma_, hp_.sparsity_mode);
    } else {
      const auto& e = w_.edges[static_cast<size_t>(i - 2)];
      prox[static_cast<size_t>(i)] =
          prox_fusion_pair(b, e.s, e.t, e.w, hp_.lambda2, sigma_);
    }
  }

  // Average of the prox outputs. Each column accumulates the summands in
  // index order, so the result is bitwise independent of the thread count.
  ParamMatrix pbar(data_.p, k);
#pragma omp parallel for schedule(static) if (par)
  for (int c = 0; c < k; ++c) {
    Eigen::VectorXd acc = prox[0].col(c);
    for (int i = 1; i < m; ++i) acc += prox[static_cast<size_t>(i)].col(c);
    pbar.col(c) = acc / static_cast<double>(m);
  }

  // Reflect every copy through the average (which still holds the previous
  // iterate at this point), then move the average itself.
  const double mu = cfg_.mu;
#pragma omp parallel for schedule(static) if (par)
  for (int i = 0; i < m; ++i)
    state.copies[static_cast<size_t>(i)] +=
        mu * (2.0 * pbar - state.average - prox[static_cast<size_t>(i)]);

  double metric = 0.0;
  if (cfg_.tol_metric == TolMetric::iterate_change) {
    const double denom = std::max(1.0, state.average.norm());
    metric = mu * (pbar - state.average).norm() / denom;
    state.average += mu * (pbar - state.average);
  } else {
    state.average += mu * (pbar - state.average);
    const double obj = eval_objective(state.average, data_, hp_, w_);
    metric = std::abs(obj - state.last_objective) /
             std::max(1.0, std::abs(state.last_objective));
    state.last_objective = obj;
  }
  ++state.iteration;
  if (!state.average.allFinite())
    throw SolverDivergenceError("non-finite iterate", state.iteration);
  return metric;
}

FitResult ProximalDecomposition::run(const ParamMatrix* init) const {
  SolverState st = init_state(init);
  FitResult res;
  res.converged = false;
  // Stop only after two consecutive sub-tol steps, the last with headroom.
  // The average can be momentarily stationary far from the optimum (e.g.
  // from a zero start when the sparsity prox maps both its first two inputs
  // to zero), so a single sub-tol reading is not trusted; the half-tol
  // margin on the final step keeps one further iteration within tol even
  // though the change sequence is not strictly monotone.
  int streak = 0;
  while (st.iteration < cfg_.max_iter) {
    const double r = step(st);
    res.residual_history.push_back(r);
    streak = r < cfg_.tol ? streak + 1 : 0;
    if (streak >= 2 && r < 0.5 * cfg_.tol) {
      res.converged = true;
      break;
    }
  }
  res.theta = st.average;
  res.iterations = st.iteration;
  res.objective = eval_objective(res.theta, data_, hp_, w_);
  return res;
}

FitResult fit(const TaskDataset& data, const Hyperparams& hp,
              const WeightGraph& w, const SolverConfig& cfg,
              const ParamMatrix* init) {
  return ProximalDecomposition(data, hp, w, cfg).run(init);
}

FitResult fit_warm(const TaskDataset& data, const Hyperparams& hp,
                   const WeightGraph& w, const SolverConfig& cfg,
                   const ParamMatrix& warm) {
  return ProximalDecomposition(data, hp, w, cfg).run(&warm);
}

}  // namespace taskfuse
