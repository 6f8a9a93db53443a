#ifndef TERRAIN_LOOP_GP_HPP
#define TERRAIN_LOOP_GP_HPP

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <cmath>
#include <stdexcept>

#include "terrain_loop/cloud.hpp"
#include "terrain_loop/errors.hpp"

namespace terrain_loop {

/// Two readings of the square-exponential kernel's length parameter:
/// Literal2Lk divides the squared distance by 2*l_k (l_k is a squared
/// length, m^2); SquaredLengthscale divides by 2*l_k^2 (l_k is a length, m).
enum class KernelMode { Literal2Lk, SquaredLengthscale };

inline double effective_lk(double l_k, KernelMode mode) {
  return mode == KernelMode::Literal2Lk ? l_k : l_k * l_k;
}

struct Hyperparams {
  double sigma_k = 1.0;   // signal variance, m^2
  double l_k = 0.01;      // kernel length parameter; meaning depends on KernelMode
  double sigma_z = 0.02;  // observation noise stddev, m

  void validate() const {
    if (!(sigma_k > 0.0) || !(l_k > 0.0) || !(sigma_z >= 0.0)) {
      throw std::invalid_argument("hyperparameters must satisfy sigma_k > 0, l_k > 0, sigma_z >= 0");
    }
  }
};

enum class KernelDeriv { Value, DdxA, DdyA };

/// k(a,b) = sigma_k * exp(-|a-b|^2 / (2*lk_eff)), or its derivative with
/// respect to the first argument's x or y coordinate.
inline double kernel(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Hyperparams& hyper,
                     KernelDeriv deriv = KernelDeriv::Value, KernelMode mode = KernelMode::Literal2Lk) {
  const double lk = effective_lk(hyper.l_k, mode);
  const Eigen::Vector2d d = a - b;
  const double value = hyper.sigma_k * std::exp(-d.squaredNorm() / (2.0 * lk));
  switch (deriv) {
    case KernelDeriv::Value:
      return value;
    case KernelDeriv::DdxA:
      return -(d.x() / lk) * value;
    case KernelDeriv::DdyA:
      return -(d.y() / lk) * value;
  }
  throw std::invalid_argument("unknown kernel derivative mode");
}

/// Trained per-submap GP. Immutable after train(); inference is read-only.
struct GpModel {
  Eigen::Matrix<double, Eigen::Dynamic, 2> train_xy;
  Eigen::VectorXd train_z;  // mean-subtracted targets
  double z_offset = 0.0;
  Eigen::MatrixXd chol;  // lower-triangular factor of K + sigma_z^2 I (+ jitter)
  Eigen::VectorXd alpha;
  Hyperparams hyper;
  KernelMode mode = KernelMode::Literal2Lk;
  double jitter = 0.0;

  Eigen::Index n() const { return train_xy.rows(); }
};

namespace detail {

/// Dense kernel matrix K(X,X) (no noise term).
inline Eigen::MatrixXd kernel_matrix(const Eigen::Matrix<double, Eigen::Dynamic, 2>& xy,
                                     const Hyperparams& hyper, KernelMode mode) {
  const Eigen::Index n = xy.rows();
  const double inv2lk = 1.0 / (2.0 * effective_lk(hyper.l_k, mode));
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    k(j, j) = hyper.sigma_k;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double dx = xy(i, 0) - xy(j, 0);
      const double dy = xy(i, 1) - xy(j, 1);
      const double v = hyper.sigma_k * std::exp(-(dx * dx + dy * dy) * inv2lk);
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return k;
}

}  // namespace detail

/// Mean-subtracts the targets, factorizes K + sigma_z^2 I with jitter
/// escalation, and precomputes alpha = (K + sigma_z^2 I)^-1 z.
inline GpModel train(const PointCloud& cloud, const Hyperparams& hyper,
                     KernelMode mode = KernelMode::Literal2Lk) {
  hyper.validate();
  GpModel model;
  model.hyper = hyper;
  model.mode = mode;

  const Eigen::Index n = static_cast<Eigen::Index>(cloud.count());
  if (n == 0) return model;  // pure prior

  model.train_xy.resize(n, 2);
  model.train_z.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Point3& p = cloud.points[static_cast<std::size_t>(i)];
    model.train_xy(i, 0) = p.x;
    model.train_xy(i, 1) = p.y;
    model.train_z(i) = p.z;
  }
  model.z_offset = model.train_z.mean();
  model.train_z.array() -= model.z_offset;

  Eigen::MatrixXd k = detail::kernel_matrix(model.train_xy, hyper, mode);
  const double noise_var = hyper.sigma_z * hyper.sigma_z;
  k.diagonal().array() += noise_var;
  const double mean_diag = k.trace() / static_cast<double>(n);

  double jitter = 0.0;
  for (;;) {
    Eigen::LLT<Eigen::MatrixXd> llt(k);
    if (llt.info() == Eigen::Success) {
      model.chol = llt.matrixL();
      model.alpha = llt.solve(model.train_z);
      model.jitter = jitter;
      return model;
    }
    const double next = (jitter == 0.0) ? 1e-10 * mean_diag : jitter * 10.0;
    if (next > 1e-4 * mean_diag) {
      throw FactorizationFailure("Cholesky failed after jitter escalation (n=" + std::to_string(n) + ")");
    }
    k.diagonal().array() += next - jitter;
    jitter = next;
  }
}

struct Prediction {
  double mean = 0.0;
  double variance = 0.0;
};

namespace detail {

/// Shared batched inference core. Queries are rows of `queries`; any output
/// pointer may be null. Column panels are solved independently so results do
/// not depend on panel boundaries chosen by callers.
inline void infer_batch(const GpModel& model,
                        const Eigen::Ref<const Eigen::Matrix<double, Eigen::Dynamic, 2>>& queries,
                        Eigen::VectorXd* mean, Eigen::VectorXd* variance,
                        Eigen::Matrix<double, Eigen::Dynamic, 2>* gradient) {
  const Eigen::Index b = queries.rows();
  const Eigen::Index n = model.n();
  if (mean) mean->resize(b);
  if (variance) variance->resize(b);
  if (gradient) gradient->resize(b, 2);
  if (b == 0) return;

  if (n == 0) {
    if (mean) mean->setConstant(model.z_offset);
    if (variance) variance->setConstant(model.hyper.sigma_k);
    if (gradient) gradient->setZero();
    return;
  }

  const double sigma_k = model.hyper.sigma_k;
  const double lk = effective_lk(model.hyper.l_k, model.mode);
  const double inv2lk = 1.0 / (2.0 * lk);

  // K(X,Q), one query per column.
  Eigen::MatrixXd kq(n, b);
  const auto xc = model.train_xy.col(0).array();
  const auto yc = model.train_xy.col(1).array();
  for (Eigen::Index j = 0; j < b; ++j) {
    kq.col(j) = sigma_k * (((xc - queries(j, 0)).square() + (yc - queries(j, 1)).square()) *
                           (-inv2lk)).exp();
  }

  if (mean || gradient) {
    const Eigen::VectorXd t0 = kq.transpose() * model.alpha;
    if (mean) *mean = t0.array() + model.z_offset;
    if (gradient) {
      const Eigen::VectorXd ax = model.alpha.cwiseProduct(model.train_xy.col(0));
      const Eigen::VectorXd ay = model.alpha.cwiseProduct(model.train_xy.col(1));
      const Eigen::VectorXd tx = kq.transpose() * ax;
      const Eigen::VectorXd ty = kq.transpose() * ay;
      // d/dq_x k(q, x_i) = -(q_x - x_i,x)/lk * k; contract against alpha.
      gradient->col(0) = -(queries.col(0).cwiseProduct(t0) - tx) / lk;
      gradient->col(1) = -(queries.col(1).cwiseProduct(t0) - ty) / lk;
    }
  }

  if (variance) {
    model.chol.triangularView<Eigen::Lower>().solveInPlace(kq);
    for (Eigen::Index j = 0; j < b; ++j) {
      (*variance)(j) = std::max(0.0, sigma_k - kq.col(j).squaredNorm());
    }
  }
}

}  // namespace detail

/// Posterior elevation mean and variance at a query coordinate.
inline Prediction infer_elevation(const GpModel& model, const Eigen::Vector2d& q) {
  Eigen::Matrix<double, Eigen::Dynamic, 2> queries(1, 2);
  queries << q.x(), q.y();
  Eigen::VectorXd mean, var;
  detail::infer_batch(model, queries, &mean, &var, nullptr);
  return {mean(0), var(0)};
}

/// Analytic spatial gradient of the posterior mean. The subtracted mean
/// offset does not enter, so gradients are invariant to elevation shifts.
inline Eigen::Vector2d infer_gradient(const GpModel& model, const Eigen::Vector2d& q) {
  Eigen::Matrix<double, Eigen::Dynamic, 2> queries(1, 2);
  queries << q.x(), q.y();
  Eigen::Matrix<double, Eigen::Dynamic, 2> grad;
  detail::infer_batch(model, queries, nullptr, nullptr, &grad);
  return {grad(0, 0), grad(0, 1)};
}

}  // namespace terrain_loop

#endif
