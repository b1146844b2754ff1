#pragma once

#include <cstdint>
#include <vector>

#include "taskfuse/data_model.hpp"

namespace taskfuse {

enum class CoefMode { equal, perturbed };

// Grouped sparse regression tasks: within each group the true parameter
// vectors share one support of support_size features; supports are disjoint
// across groups. equal mode gives every group the constant coef_value on its
// support; perturbed mode draws each nonzero as 0.5 + N(0,1)/3 independently
// per task.
struct SynthSpec {
  int n = 20;               // samples per task
  int p = 50;               // features
  int groups = 3;
  int tasks_per_group = 5;
  int support_size = 5;     // per group
  CoefMode coef_mode = CoefMode::equal;
  double coef_value = 0.5;
  double noise_sd = 1.0;
  std::uint64_t seed = 0;

  int task_count() const { return groups * tasks_per_group; }
  void validate() const;
};

struct SynthInstance {
  TaskDataset train;
  TaskDataset validation;
  TaskDataset test;
  ParamMatrix true_theta;                    // p x k
  std::vector<std::vector<int>> true_groups;  // task indices per group
};

// X entries i.i.d. standard normal with one X shared by all tasks of a
// split; y = X theta* + noise_sd * N(0,1). Bitwise deterministic given the
// seed.
SynthInstance generate(const SynthSpec& spec);

}  // namespace taskfuse
