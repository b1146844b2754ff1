#pragma once

#include <string>
#include <vector>

#include "taskfuse/data_model.hpp"
#include "taskfuse/solver.hpp"
#include "taskfuse/weight_graph.hpp"

namespace taskfuse {

struct PathSpec {
  std::vector<double> lambda2_grid;  // strictly increasing, nonnegative
  double lambda1 = 0.0;
  double merge_tol = 1e-4;  // applied to ||theta_s - theta_t||_2 / sqrt(p)

  void validate() const;
};

// n log-spaced points in [lo, hi], lo > 0.
std::vector<double> log_spaced(double lo, double hi, int n);

struct PathPoint {
  double lambda2 = 0.0;
  FitResult fit;
};

// One fit per grid point, each warm-started from the previous point.
std::vector<PathPoint> compute_path(const TaskDataset& data,
                                    const WeightGraph& w, const PathSpec& spec,
                                    const SolverConfig& cfg);

// As compute_path, then keeps doubling lambda2 past the end of the grid
// (one extra point per doubling, warm-started) until a single cluster
// remains at spec.merge_tol or lambda2 exceeds cap.
std::vector<PathPoint> compute_path_auto(const TaskDataset& data,
                                         const WeightGraph& w,
                                         const PathSpec& spec,
                                         const SolverConfig& cfg,
                                         double cap = 1e8);

struct MergeEvent {
  double height;  // lambda2 at which the clusters join (linkage distance for
                  // the post-clustering baseline)
  int left;       // child cluster ids; leaves are 0..k-1
  int right;
  int id;  // id of the merged cluster, k + event index
};

// A raw clustering split observed along the path before monotone closure:
// tasks a and b were fused at some earlier grid point but not at this one.
struct RawSplitNote {
  double lambda2;
  int task_a;
  int task_b;
};

struct Dendrogram {
  std::vector<std::string> leaves;  // task ids; leaf cluster id = index
  std::vector<MergeEvent> merges;   // heights non-decreasing in list order
  std::vector<RawSplitNote> raw_splits;  // diagnostics only
};

// Normalized pairwise column distances ||theta_s - theta_t||_2 / sqrt(p) at
// one grid point. Sufficient for tree extraction; this is what a --light
// path file stores instead of theta.
struct PathDistances {
  double lambda2 = 0.0;
  Eigen::MatrixXd dist;  // k x k symmetric, zero diagonal
};

PathDistances normalized_distances(double lambda2, const ParamMatrix& theta);

// Clusters at each grid point are connected components of the graph joining
// tasks within merge_tol; a merge is recorded at the first lambda2 where two
// clusters connect, and merged clusters never split again (monotone
// closure). Simultaneous multi-way merges become a sequence of pairwise
// merges at equal height, ordered by smallest member index.
Dendrogram extract_tree(const std::vector<PathDistances>& path,
                        double merge_tol,
                        const std::vector<std::string>& leaf_ids);
Dendrogram extract_tree(const std::vector<PathPoint>& path, double merge_tol,
                        const std::vector<std::string>& leaf_ids);

// Partition into g clusters obtained by undoing the last g-1 merges of a
// fully merged tree. Clusters are sorted by smallest member.
std::vector<std::vector<int>> cut_tree(const Dendrogram& tree, int g);

std::string dendrogram_to_json(const Dendrogram& tree);
Dendrogram dendrogram_from_json(const std::string& text);

// Newick string with branch lengths equal to differences of log(height).
// Heights at or below the first positive merge height get branch length 0.
std::string dendrogram_to_newick(const Dendrogram& tree);

}  // namespace taskfuse
