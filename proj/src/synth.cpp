#include "taskfuse/synth.hpp"

#include <cmath>

#include "taskfuse/errors.hpp"
#include "taskfuse/rng.hpp"

namespace taskfuse {

void SynthSpec::validate() const {
  if (n < 1 || p < 1 || groups < 1 || tasks_per_group < 1 || support_size < 1)
    throw ValidationError("n, p, groups, tasks_per_group, support_size must "
                          "all be >= 1");
  if (support_size > p)
    throw ValidationError("support_size exceeds feature count p");
  if (groups * support_size > p)
    throw ValidationError("disjoint supports need groups * support_size <= p");
  if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd))
    throw ValidationError("noise_sd must be finite and >= 0");
  if (!std::isfinite(coef_value))
    throw ValidationError("coef_value must be finite");
}

SynthInstance generate(const SynthSpec& spec) {
  spec.validate();
  const int k = spec.task_count();
  std::mt19937_64 rng(spec.seed);
  NormalSampler normal(rng);

  SynthInstance inst;
  inst.true_theta = ParamMatrix::Zero(spec.p, k);
  for (int g = 0; g < spec.groups; ++g) {
    std::vector<int> group;
    for (int t = 0; t < spec.tasks_per_group; ++t) {
      const int s = g * spec.tasks_per_group + t;
      group.push_back(s);
      for (int j = 0; j < spec.support_size; ++j)
        inst.true_theta(g * spec.support_size + j, s) =
            spec.coef_mode == CoefMode::equal ? spec.coef_value
                                              : 0.5 + normal() / 3.0;
    }
    inst.true_groups.push_back(std::move(group));
  }

  // One design matrix per split, shared by every task of that split; group
  // structure is then visible in response similarity, which is what the
  // k-nearest-neighbor weights rely on.
  auto make_split = [&]() {
    Eigen::MatrixXd X(spec.n, spec.p);
    for (int i = 0; i < spec.n; ++i)
      for (int j = 0; j < spec.p; ++j) X(i, j) = normal();
    TaskDataset d;
    d.p = spec.p;
    for (int s = 0; s < k; ++s) {
      Task task;
      task.id = "task" + std::to_string(s);
      task.X = X;
      task.y = X * inst.true_theta.col(s);
      for (int i = 0; i < spec.n; ++i) task.y(i) += spec.noise_sd * normal();
      d.tasks.push_back(std::move(task));
    }
    return d;
  };
  inst.train = make_split();
  inst.validation = make_split();
  inst.test = make_split();
  return inst;
}

}  // namespace taskfuse
