#pragma once

#include <string>
#include <vector>

#include "taskfuse/data_model.hpp"

namespace taskfuse {

struct WeightEdge {
  int s;     // smaller task index
  int t;     // larger task index
  double w;  // strictly positive
};

// Sparse symmetric pairwise task weights, stored once per unordered pair and
// kept sorted by (s, t). Zero-weight pairs are never stored, so the solver's
// summand count is 2 + edges.size().
struct WeightGraph {
  std::vector<WeightEdge> edges;
  int k = 0;

  void validate() const;
};

// Complete graph on k tasks, all weights 1.
WeightGraph uniform_weights(int k);

// Edge (s,t) present iff t is among the kappa nearest tasks of s by response
// distance ||y_s - y_t||, or vice versa; weight exp(-phi * d^2). Distance
// ties are broken by lower task index. Requires equal n_s across tasks.
WeightGraph knn_weights(const TaskDataset& data, int kappa, double phi);

// CSV rows `s,t,w` with s < t; an optional header line is skipped. Rows with
// w == 0 are dropped; negative weights, duplicate pairs, and out-of-range
// indices are errors. An empty file yields an empty graph.
WeightGraph load_weights(const std::string& path, int k);

}  // namespace taskfuse
