#include "taskfuse/prox_ops.hpp"

#include <cmath>

#include "taskfuse/errors.hpp"

namespace taskfuse {

LossProxCache::LossProxCache(const TaskDataset& data, double sigma)
    : sigma_(sigma), p_(data.p) {
  if (!(sigma > 0.0)) throw ValidationError("prox scale sigma must be > 0");
  factors_.resize(data.tasks.size());
  for (size_t s = 0; s < data.tasks.size(); ++s) {
    const auto& X = data.tasks[s].X;
    auto& f = factors_[s];
    f.xty_scaled = sigma * (X.transpose() * data.tasks[s].y);
    f.woodbury = X.rows() < X.cols();
    if (f.woodbury) {
      // factor the n x n system 1/sigma I + 2 X X'
      Eigen::MatrixXd G = 2.0 * (X * X.transpose());
      G.diagonal().array() += 1.0 / sigma;
      f.llt.compute(G);
      f.X = X;
    } else {
      Eigen::MatrixXd H = sigma * (X.transpose() * X);
      H.diagonal().array() += 0.5;
      f.llt.compute(H);
    }
    if (f.llt.info() != Eigen::Success)
      throw ValidationError("loss prox factorization failed for task '" +
                            data.tasks[s].id + "'");
  }
}

Eigen::VectorXd LossProxCache::apply(int s, const Eigen::VectorXd& b) const {
  const auto& f = factors_[static_cast<size_t>(s)];
  const Eigen::VectorXd r = f.xty_scaled + 0.5 * b;
  if (!f.woodbury) return f.llt.solve(r);
  // (sigma X'X + I/2)^{-1} r = 2r - 4 X' (1/sigma I + 2XX')^{-1} (X r)
  return 2.0 * r - 4.0 * (f.X.transpose() * f.llt.solve(f.X * r));
}

ParamMatrix prox_loss(const ParamMatrix& b, const LossProxCache& cache) {
  if (b.rows() != cache.p() || b.cols() != cache.k())
    throw ValidationError("prox_loss input shape mismatch");
  ParamMatrix out(b.rows(), b.cols());
  for (int s = 0; s < cache.k(); ++s) out.col(s) = cache.apply(s, b.col(s));
  return out;
}

ParamMatrix prox_sparsity(const ParamMatrix& b, double lambda1, double sigma,
                          SparsityMode mode) {
  const double t = lambda1 * sigma;
  if (!(t >= 0.0)) throw ValidationError("lambda1 * sigma must be >= 0");
  if (mode == SparsityMode::elementwise_l1) {
    return b.unaryExpr([t](double v) {
      if (v > t) return v - t;
      if (v < -t) return v + t;
      return 0.0;
    });
  }
  ParamMatrix out(b.rows(), b.cols());
  for (Eigen::Index j = 0; j < b.rows(); ++j) {
    const double nrm = b.row(j).norm();
    out.row(j) = nrm <= t ? Eigen::RowVectorXd::Zero(b.cols())
                          : ((1.0 - t / nrm) * b.row(j)).eval();
  }
  return out;
}

ParamMatrix prox_fusion_pair(const ParamMatrix& b, int s, int t, double w_st,
                             double lambda2, double sigma) {
  if (s < 0 || t <= s || t >= b.cols())
    throw ValidationError("prox_fusion_pair needs 0 <= s < t < k");
  const double r = sigma * lambda2 * w_st;
  if (!(r >= 0.0)) throw ValidationError("sigma*lambda2*w must be >= 0");

  ParamMatrix out = b;
  const double d = (b.col(s) - b.col(t)).norm();
  const double c = (d <= 2.0 * r) ? 0.5 : r / d;
  // Moving both columns by the same vector h keeps their sum exact and makes
  // b_s == b_t land on a shared midpoint bitwise.
  const Eigen::VectorXd h = c * (b.col(s) - b.col(t));
  out.col(s) = b.col(s) - h;
  out.col(t) = b.col(t) + h;
  return out;
}

}  // namespace taskfuse
