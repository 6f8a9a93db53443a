#ifndef TERRAIN_LOOP_GP_FIT_HPP
#define TERRAIN_LOOP_GP_FIT_HPP

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <optional>
#include <random>

#include "terrain_loop/cloud.hpp"
#include "terrain_loop/errors.hpp"
#include "terrain_loop/gp.hpp"
#include "terrain_loop/rng.hpp"

namespace terrain_loop {

struct FitOptions {
  int max_iterations = 100;
  int starts = 3;
  double rel_tol = 1e-6;
  double lk_eff_min = 1e-4;  // bounds on the effective squared length, m^2
  double lk_eff_max = 10.0;
  double sigma_z_min = 1e-3;  // m
  double sigma_z_max = 1.0;
  double sigma_k_min = 1e-9;  // m^2; wide, only guards against under/overflow
  double sigma_k_max = 1e6;
  std::uint64_t seed = 0x7e22a1ull;
};

struct FitReport {
  bool converged = true;
  int iterations = 0;
  double lml_init = 0.0;
  double lml_final = 0.0;
};

namespace detail {

struct LmlWorkspace {
  Eigen::MatrixXd d2;   // pairwise squared distances
  Eigen::VectorXd z;    // centered targets
  Eigen::MatrixXd e;    // scratch: exp(-d2 / (2 lk))
  Eigen::MatrixXd kinv; // scratch
};

inline LmlWorkspace make_lml_workspace(const PointCloud& cloud) {
  const Eigen::Index n = static_cast<Eigen::Index>(cloud.count());
  LmlWorkspace ws;
  Eigen::Matrix<double, Eigen::Dynamic, 2> xy(n, 2);
  ws.z.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    xy(i, 0) = cloud.points[static_cast<std::size_t>(i)].x;
    xy(i, 1) = cloud.points[static_cast<std::size_t>(i)].y;
    ws.z(i) = cloud.points[static_cast<std::size_t>(i)].z;
  }
  ws.z.array() -= ws.z.mean();
  ws.d2.resize(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    ws.d2(j, j) = 0.0;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double dx = xy(i, 0) - xy(j, 0);
      const double dy = xy(i, 1) - xy(j, 1);
      ws.d2(i, j) = ws.d2(j, i) = dx * dx + dy * dy;
    }
  }
  return ws;
}

/// log p(z | X, theta) = -1/2 z^T alpha - sum log L_ii - n/2 log(2 pi).
/// When `grad` is non-null, also the gradient in (log sigma_k, log l_k,
/// log sigma_z); returns -inf if the factorization fails.
inline double lml_eval(LmlWorkspace& ws, const Hyperparams& hyper, KernelMode mode,
                       Eigen::Vector3d* grad) {
  const Eigen::Index n = ws.z.size();
  const double lk = effective_lk(hyper.l_k, mode);
  ws.e = (-ws.d2 / (2.0 * lk)).array().exp();
  Eigen::MatrixXd k = hyper.sigma_k * ws.e;
  k.diagonal().array() += hyper.sigma_z * hyper.sigma_z;

  Eigen::LLT<Eigen::MatrixXd> llt(k);
  if (llt.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
  const Eigen::VectorXd alpha = llt.solve(ws.z);
  const double logdet = llt.matrixLLT().diagonal().array().log().sum();
  const double lml = -0.5 * ws.z.dot(alpha) - logdet -
                     0.5 * static_cast<double>(n) * std::log(2.0 * M_PI);
  if (grad) {
    ws.kinv = llt.solve(Eigen::MatrixXd::Identity(n, n));
    // d lml / d theta = 1/2 tr((alpha alpha^T - K^-1) dK/dtheta)
    const Eigen::MatrixXd w = alpha * alpha.transpose() - ws.kinv;
    const double d_sigma_k = 0.5 * hyper.sigma_k * (w.array() * ws.e.array()).sum();
    const double lk_chain = (mode == KernelMode::Literal2Lk) ? 1.0 : 2.0;
    const double d_lk = 0.5 * lk_chain * hyper.sigma_k / (2.0 * lk) *
                        (w.array() * ws.e.array() * ws.d2.array()).sum();
    const double d_sigma_z = hyper.sigma_z * hyper.sigma_z * w.trace();
    *grad = {d_sigma_k, d_lk, d_sigma_z};
  }
  return lml;
}

}  // namespace detail

/// Log marginal likelihood of the mean-subtracted elevations under the GP.
inline double log_marginal_likelihood(const PointCloud& cloud, const Hyperparams& hyper,
                                      KernelMode mode = KernelMode::Literal2Lk) {
  hyper.validate();
  auto ws = detail::make_lml_workspace(cloud);
  return detail::lml_eval(ws, hyper, mode, nullptr);
}

/// Maximizes the log marginal likelihood with multi-start projected gradient
/// ascent in log-parameter space. The returned parameters never score below
/// the initialization. A start that hits the iteration cap is reported as
/// non-converged through `report`; the best parameters found are returned
/// either way.
inline Hyperparams fit_hyperparameters(const PointCloud& cloud,
                                       std::optional<Hyperparams> init = std::nullopt,
                                       KernelMode mode = KernelMode::Literal2Lk,
                                       const FitOptions& options = {}, FitReport* report = nullptr) {
  const Eigen::Index n = static_cast<Eigen::Index>(cloud.count());
  if (n < 3) throw std::invalid_argument("fit_hyperparameters: need at least 3 points");

  auto ws = detail::make_lml_workspace(cloud);
  const double z_var = ws.z.squaredNorm() / static_cast<double>(n);
  const bool z_flat = ws.z.maxCoeff() - ws.z.minCoeff() == 0.0;
  const bool xy_flat = ws.d2.maxCoeff() == 0.0;
  if (z_flat && xy_flat) {
    throw DegenerateDataError("fit_hyperparameters: all points identical");
  }

  Hyperparams start0;
  if (init) {
    init->validate();
    start0 = *init;
  } else {
    start0.sigma_k = std::max(z_var, 1e-8);
    start0.l_k = (mode == KernelMode::Literal2Lk) ? 0.01 : 0.1;  // ~0.1 m length-scale
    start0.sigma_z = 0.02;
  }

  // Bounds in actual-parameter terms, widened to include the initialization.
  const double lk_pow = (mode == KernelMode::Literal2Lk) ? 1.0 : 0.5;
  double lo[3] = {options.sigma_k_min, std::pow(options.lk_eff_min, lk_pow), options.sigma_z_min};
  double hi[3] = {options.sigma_k_max, std::pow(options.lk_eff_max, lk_pow), options.sigma_z_max};
  const double init_vals[3] = {start0.sigma_k, start0.l_k, std::max(start0.sigma_z, 1e-12)};
  for (int i = 0; i < 3; ++i) {
    lo[i] = std::min(lo[i], init_vals[i]);
    hi[i] = std::max(hi[i], init_vals[i]);
  }

  auto clamp_log = [&](Eigen::Vector3d x) {
    for (int i = 0; i < 3; ++i) x(i) = std::clamp(x(i), std::log(lo[i]), std::log(hi[i]));
    return x;
  };
  auto to_hyper = [](const Eigen::Vector3d& x) {
    return Hyperparams{std::exp(x(0)), std::exp(x(1)), std::exp(x(2))};
  };

  const Eigen::Vector3d x_init =
      clamp_log({std::log(init_vals[0]), std::log(init_vals[1]), std::log(init_vals[2])});
  const double lml_init = detail::lml_eval(ws, to_hyper(x_init), mode, nullptr);

  Eigen::Vector3d best_x = x_init;
  double best_f = lml_init;
  bool best_converged = true;
  int best_iters = 0;

  for (int s = 0; s < options.starts; ++s) {
    Eigen::Vector3d x = x_init;
    if (s > 0) {
      auto rng = substream(options.seed, static_cast<std::uint64_t>(s));
      std::uniform_real_distribution<double> u(-1.0, 1.0);
      for (int i = 0; i < 3; ++i) x(i) += u(rng);
      x = clamp_log(x);
    }

    Eigen::Vector3d g;
    double f = detail::lml_eval(ws, to_hyper(x), mode, &g);
    if (!std::isfinite(f)) continue;

    bool converged = false;
    int iter = 0;
    double step = 0.0;
    for (; iter < options.max_iterations; ++iter) {
      const double gmax = g.cwiseAbs().maxCoeff();
      if (gmax < 1e-12) {
        converged = true;
        break;
      }
      double t = (step > 0.0) ? std::min(2.0 * step, 2.0 / gmax) : 0.3 / gmax;
      double f_new = -std::numeric_limits<double>::infinity();
      Eigen::Vector3d x_new = x;
      bool improved = false;
      for (int back = 0; back < 30; ++back) {
        x_new = clamp_log(x + t * g);
        f_new = detail::lml_eval(ws, to_hyper(x_new), mode, nullptr);
        if (std::isfinite(f_new) && f_new > f + 1e-4 * g.dot(x_new - x) && f_new > f) {
          improved = true;
          break;
        }
        t *= 0.5;
      }
      if (!improved) {
        converged = true;  // no ascent direction within line search: at a (constrained) optimum
        break;
      }
      step = t;
      const double gain = f_new - f;
      x = x_new;
      f = detail::lml_eval(ws, to_hyper(x), mode, &g);
      if (gain < options.rel_tol * std::max(1.0, std::abs(f))) {
        converged = true;
        break;
      }
    }

    if (f > best_f) {
      best_f = f;
      best_x = x;
      best_converged = converged;
      best_iters = iter;
    }
  }

  if (report) {
    report->converged = best_converged;
    report->iterations = best_iters;
    report->lml_init = lml_init;
    report->lml_final = best_f;
  }
  return to_hyper(best_x);
}

}  // namespace terrain_loop

#endif
