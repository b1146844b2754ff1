#pragma once

#include <Eigen/Cholesky>
#include <vector>

#include "taskfuse/data_model.hpp"

namespace taskfuse {

// Per-task factorizations used by prox_loss. For each task the factorization
// of (sigma X'X + I/2) is built once per sigma and reused every iteration;
// when n_s < p the equivalent n_s x n_s system (1/sigma I + 2 X X') is
// factorized instead and applied through the matrix inversion identity.
class LossProxCache {
 public:
  LossProxCache() = default;
  LossProxCache(const TaskDataset& data, double sigma);

  double sigma() const { return sigma_; }
  Eigen::Index p() const { return p_; }
  int k() const { return static_cast<int>(factors_.size()); }

  // Minimizer of sigma ||y_s - X_s a||^2 + 1/2 ||a - b||^2.
  Eigen::VectorXd apply(int s, const Eigen::VectorXd& b) const;

 private:
  struct TaskFactor {
    bool woodbury = false;
    Eigen::LLT<Eigen::MatrixXd> llt;  // p x p direct or n x n woodbury
    Eigen::MatrixXd X;
    Eigen::VectorXd xty_scaled;  // sigma X' y
  };
  std::vector<TaskFactor> factors_;
  double sigma_ = 0.0;
  Eigen::Index p_ = 0;
};

// Column s of the result is the exact minimizer of
// sigma ||y_s - X_s a||^2 + 1/2 ||a - b_s||^2.
ParamMatrix prox_loss(const ParamMatrix& b, const LossProxCache& cache);

// elementwise_l1: soft threshold every entry at lambda1 * sigma.
// row_group_l21: scale every row by [1 - lambda1 sigma / ||row||_2]_+.
ParamMatrix prox_sparsity(const ParamMatrix& b, double lambda1, double sigma,
                          SparsityMode mode);

// Exact prox of sigma lambda2 w_st ||a_s - a_t||_2 jointly in (a_s, a_t):
// with d = ||b_s - b_t|| and c = min(sigma lambda2 w_st / d, 1/2), columns s
// and t move toward each other by c (b_s - b_t) and collapse to the midpoint
// once sigma lambda2 w_st >= d/2. Other columns pass through unchanged.
ParamMatrix prox_fusion_pair(const ParamMatrix& b, int s, int t, double w_st,
                             double lambda2, double sigma);

}  // namespace taskfuse
