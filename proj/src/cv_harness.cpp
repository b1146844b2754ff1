#include "taskfuse/cv_harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "taskfuse/baselines.hpp"
#include "taskfuse/errors.hpp"

namespace taskfuse {

double rmse(const ParamMatrix& theta, const TaskDataset& data) {
  if (theta.rows() != data.p || theta.cols() != data.task_count())
    throw ValidationError("theta shape does not match dataset");
  double sq = 0.0;
  for (int s = 0; s < data.task_count(); ++s) {
    const auto& task = data.tasks[static_cast<size_t>(s)];
    sq += (task.y - task.X * theta.col(s)).squaredNorm();
  }
  return std::sqrt(sq / static_cast<double>(data.total_rows()));
}

namespace {

void check_aligned(const TaskDataset& a, const TaskDataset& b,
                   const char* what) {
  if (a.p != b.p || a.task_count() != b.task_count())
    throw ValidationError(std::string(what) + ": dimension mismatch");
  for (int s = 0; s < a.task_count(); ++s)
    if (a.tasks[static_cast<size_t>(s)].id != b.tasks[static_cast<size_t>(s)].id)
      throw ValidationError(std::string(what) + ": task ids differ at index " +
                            std::to_string(s));
}

}  // namespace

SelectionResult select_hyperparams(const TaskDataset& train,
                                   const TaskDataset& val,
                                   const WeightGraph& w,
                                   const std::vector<double>& grid1,
                                   const std::vector<double>& grid2,
                                   const SolverConfig& cfg) {
  train.validate();
  val.validate();
  check_aligned(train, val, "train/val");
  if (grid1.empty() || grid2.empty())
    throw ValidationError("hyperparameter grids must be nonempty");

  auto g1 = grid1;
  auto g2 = grid2;
  std::sort(g1.begin(), g1.end());
  std::sort(g2.begin(), g2.end());

  SelectionResult best;
  double best_rmse = std::numeric_limits<double>::infinity();
  for (const double l1 : g1) {
    const ParamMatrix* warm = nullptr;
    FitResult prev;
    for (const double l2 : g2) {
      Hyperparams hp;
      hp.lambda1 = l1;
      hp.lambda2 = l2;
      prev = warm ? fit_warm(train, hp, w, cfg, *warm) : fit(train, hp, w, cfg);
      warm = &prev.theta;
      const double r = rmse(prev.theta, val);
      const bool better =
          r < best_rmse ||
          (r == best_rmse &&
           (l1 > best.hp.lambda1 ||
            (l1 == best.hp.lambda1 && l2 > best.hp.lambda2)));
      if (better) {
        best_rmse = r;
        best.hp = hp;
        best.theta = prev.theta;
      }
    }
  }
  best.val_rmse = best_rmse;
  return best;
}

std::vector<double> default_lambda1_grid(const TaskDataset& train) {
  train.validate();
  double scale = 0.0;
  for (const auto& task : train.tasks)
    scale = std::max(scale,
                     (task.X.transpose() * task.y).lpNorm<Eigen::Infinity>() /
                         static_cast<double>(task.y.size()));
  if (scale <= 0.0) return {0.0};
  return log_spaced(0.01 * scale, 10.0 * scale, 10);
}

std::vector<double> default_lambda2_grid(const TaskDataset& train) {
  train.validate();
  double scale = 0.0;
  for (const auto& task : train.tasks)
    scale = std::max(scale,
                     (task.X.transpose() * task.y).lpNorm<Eigen::Infinity>() /
                         static_cast<double>(task.y.size()));
  if (scale <= 0.0) return {0.0};
  std::vector<double> grid = {0.0};
  for (const double v : log_spaced(0.02 * scale, 20.0 * scale, 8))
    grid.push_back(v);
  return grid;
}

Method method_from_string(const std::string& name) {
  if (name == "ours") return Method::ours;
  if (name == "single_task") return Method::single_task;
  if (name == "nogroup") return Method::nogroup;
  if (name == "pregroup") return Method::pregroup;
  throw ValidationError("unknown method '" + name +
                        "' (expected ours, single_task, nogroup, pregroup)");
}

std::string method_name(Method m) {
  switch (m) {
    case Method::ours: return "ours";
    case Method::single_task: return "single_task";
    case Method::nogroup: return "nogroup";
    case Method::pregroup: return "pregroup";
  }
  return "?";
}

std::string BenchmarkReport::to_csv() const {
  std::ostringstream os;
  os << "method,kappa,mean_rmse,std_rmse,mean_seconds\n";
  char buf[128];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%s,%d,%.17g,%.17g,%.17g\n",
                  r.method.c_str(), r.kappa, r.mean_rmse, r.std_rmse,
                  r.mean_seconds);
    os << buf;
  }
  return os.str();
}

std::string BenchmarkReport::to_text() const {
  std::ostringstream os;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-12s %6s %12s %12s %12s\n", "method",
                "kappa", "mean_rmse", "std_rmse", "seconds");
  os << buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%-12s %6d %12.4f %12.4f %12.3f\n",
                  r.method.c_str(), r.kappa, r.mean_rmse, r.std_rmse,
                  r.mean_seconds);
    os << buf;
  }
  return os.str();
}

namespace {

struct Accum {
  std::vector<double> rmses;
  std::vector<double> seconds;
};

BenchmarkRow finalize(const std::string& method, int kappa, const Accum& a) {
  BenchmarkRow row;
  row.method = method;
  row.kappa = kappa;
  const auto n = static_cast<double>(a.rmses.size());
  double mean = 0.0;
  for (const double v : a.rmses) mean += v;
  mean /= n;
  double var = 0.0;
  for (const double v : a.rmses) var += (v - mean) * (v - mean);
  row.mean_rmse = mean;
  row.std_rmse = a.rmses.size() > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
  double secs = 0.0;
  for (const double v : a.seconds) secs += v;
  row.mean_seconds = secs / n;
  return row;
}

// Per-task lasso with per-task lambda1 chosen on the validation rows.
ParamMatrix single_task_selected(const SynthInstance& inst,
                                 const std::vector<double>& grid1) {
  const int k = inst.train.task_count();
  ParamMatrix theta(inst.train.p, k);
  for (int s = 0; s < k; ++s) {
    const auto& tr = inst.train.tasks[static_cast<size_t>(s)];
    const auto& va = inst.validation.tasks[static_cast<size_t>(s)];
    double best_r = std::numeric_limits<double>::infinity();
    double best_l1 = 0.0;
    Eigen::VectorXd best_beta = Eigen::VectorXd::Zero(inst.train.p);
    for (const double l1 : grid1) {
      const auto fit = lasso_cd(tr.X, tr.y, l1);
      const double r = (va.y - va.X * fit.beta).norm();
      if (r < best_r || (r == best_r && l1 > best_l1)) {
        best_r = r;
        best_l1 = l1;
        best_beta = fit.beta;
      }
    }
    theta.col(s) = best_beta;
  }
  return theta;
}

// Single-lambda1 methods (nogroup, pregroup): select on validation RMSE.
template <typename FitFn>
ParamMatrix select_l1_only(const SynthInstance& inst,
                           const std::vector<double>& grid1, FitFn&& fitfn) {
  double best_r = std::numeric_limits<double>::infinity();
  double best_l1 = 0.0;
  ParamMatrix best;
  for (const double l1 : grid1) {
    const ParamMatrix theta = fitfn(l1);
    const double r = rmse(theta, inst.validation);
    if (r < best_r || (r == best_r && l1 > best_l1)) {
      best_r = r;
      best_l1 = l1;
      best = theta;
    }
  }
  return best;
}

}  // namespace

BenchmarkReport benchmark(const SynthSpec& spec, int repeats,
                          const std::vector<Method>& methods,
                          const BenchmarkOptions& opts) {
  spec.validate();
  if (repeats < 1) throw ValidationError("repeats must be >= 1");
  if (methods.empty()) throw ValidationError("no methods requested");

  std::vector<int> kappas = {opts.kappa};
  if (opts.kappa_sweep) kappas = {2, 3, 4, 5, 6};

  // One accumulator per output row, keyed by (method, kappa).
  std::vector<std::pair<std::pair<Method, int>, Accum>> acc;
  for (const Method m : methods) {
    if (m == Method::ours)
      for (const int kap : kappas) acc.push_back({{m, kap}, {}});
    else
      acc.push_back({{m, 0}, {}});
  }

  for (int rep = 0; rep < repeats; ++rep) {
    SynthSpec s = spec;
    s.seed = spec.seed + static_cast<std::uint64_t>(rep);
    const SynthInstance inst = generate(s);
    const auto grid1 = default_lambda1_grid(inst.train);
    const auto grid2 = default_lambda2_grid(inst.train);

    for (auto& [key, a] : acc) {
      const auto t0 = std::chrono::steady_clock::now();
      ParamMatrix theta;
      switch (key.first) {
        case Method::ours: {
          const WeightGraph w = knn_weights(inst.train, key.second, opts.phi);
          // Scaling every weight by a constant is equivalent to scaling
          // lambda2, so keep the grid effective by normalizing out the
          // strongest edge weight (a no-op at phi = 0).
          double wmax = 0.0;
          for (const auto& e : w.edges) wmax = std::max(wmax, e.w);
          auto g2 = grid2;
          if (wmax > 0.0)
            for (double& v : g2) v /= wmax;
          theta = select_hyperparams(inst.train, inst.validation, w, grid1, g2,
                                     opts.cfg)
                      .theta;
          break;
        }
        case Method::single_task:
          theta = single_task_selected(inst, grid1);
          break;
        case Method::nogroup:
          theta = select_l1_only(inst, grid1, [&](double l1) {
            return nogroup_mtl_baseline(inst.train, l1, opts.cfg);
          });
          break;
        case Method::pregroup:
          theta = select_l1_only(inst, grid1, [&](double l1) {
            return pregroup_mtl_baseline(inst.train, spec.groups, l1,
                                         opts.cfg);
          });
          break;
      }
      const auto t1 = std::chrono::steady_clock::now();
      a.rmses.push_back(rmse(theta, inst.test));
      a.seconds.push_back(std::chrono::duration<double>(t1 - t0).count());
    }
  }

  BenchmarkReport report;
  for (const auto& [key, a] : acc)
    report.rows.push_back(finalize(
        method_name(key.first), key.first == Method::ours ? key.second : 0,
        a));
  return report;
}

}  // namespace taskfuse
