/* SPDX-FileCopyrightText: 2026 uqsplat Authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "uqsplat/image.hpp"
#include "uqsplat/render.hpp"
#include "uqsplat/scene.hpp"

namespace uqsplat {

inline constexpr double kDefaultLambda = 1e-4;
inline constexpr int kFullFisherGuard = 200;

/// Gaussian pixel-noise model, one sigma for all channels.
struct NoiseModel {
    double sigma = 1.0;
};

inline void validate_noise(const NoiseModel& noise) {
    if (!(noise.sigma > 0.0) || !std::isfinite(noise.sigma)) {
        throw std::invalid_argument("sigma must be positive and finite");
    }
}

/// Diagonal Fisher approximation, accumulated online or in batch.
struct FisherDiag {
    Eigen::VectorXd values;
    int step_count = 0;
    int total_steps = 1;

    static FisherDiag zero(Eigen::Index dim, int total) {
        FisherDiag f;
        f.values = Eigen::VectorXd::Zero(dim);
        f.step_count = 0;
        f.total_steps = total;
        return f;
    }
};

/// Diagonal Laplace covariance diag(Sigma) = 1 / (fisher + lambda).
struct CovDiag {
    Eigen::VectorXd values;
    double lambda = kDefaultLambda;
};

/// Negative log-likelihood under the Gaussian noise model:
/// (1 / 2 sigma^2) * sum over pixels and channels of squared residual.
inline double nll(const Image& pred, const Image& gt,
                  const NoiseModel& noise) {
    if (!pred.same_extent(gt)) {
        throw std::invalid_argument("dimension mismatch");
    }
    validate_noise(noise);
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.pixels.size(); ++i) {
        const double r = pred.pixels[i] - gt.pixels[i];
        acc += r * r;
    }
    return acc / (2.0 * noise.sigma * noise.sigma);
}

/// Gradient of nll: sum over pixels of sigma^-2 J_u^T r(u). The Jacobian
/// list determines which pixels are summed, in list order.
inline ParamVector nll_gradient(const std::vector<PixelJacobian>& jacobians,
                                const Image& pred, const Image& gt,
                                const NoiseModel& noise) {
    if (!pred.same_extent(gt)) {
        throw std::invalid_argument("dimension mismatch");
    }
    validate_noise(noise);
    if (jacobians.empty()) {
        throw std::invalid_argument("no jacobians supplied");
    }
    const Eigen::Index dim = jacobians.front().matrix.cols();
    const double inv_s2 = 1.0 / (noise.sigma * noise.sigma);
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(dim);
    for (const PixelJacobian& pj : jacobians) {
        if (pj.matrix.cols() != dim) {
            throw std::invalid_argument("dimension mismatch");
        }
        const Vec3 r = pred.at(pj.pixel.x, pj.pixel.y) -
                       gt.at(pj.pixel.x, pj.pixel.y);
        grad.noalias() += inv_s2 * (pj.matrix.transpose() * r);
    }
    return ParamVector(std::move(grad));
}

/// Dense FIM sigma^-2 sum_u J_u^T J_u. Oracle-scale only (guarded).
inline Eigen::MatrixXd fisher_full(const std::vector<PixelJacobian>& jacobians,
                                   const NoiseModel& noise) {
    validate_noise(noise);
    if (jacobians.empty()) {
        throw std::invalid_argument("no jacobians supplied");
    }
    const Eigen::Index dim = jacobians.front().matrix.cols();
    if (dim > kFullFisherGuard) {
        throw std::invalid_argument("full FIM restricted to desk scale");
    }
    Eigen::MatrixXd fim = Eigen::MatrixXd::Zero(dim, dim);
    for (const PixelJacobian& pj : jacobians) {
        fim.noalias() += pj.matrix.transpose() * pj.matrix;
    }
    fim /= noise.sigma * noise.sigma;
    return fim;
}

/// Diagonal of the FIM computed directly: entry j = sigma^-2 sum of squared
/// column-j entries. Matches diag(fisher_full) exactly on guarded inputs.
inline FisherDiag fisher_diag_batch(
    const std::vector<PixelJacobian>& jacobians, const NoiseModel& noise) {
    validate_noise(noise);
    if (jacobians.empty()) {
        throw std::invalid_argument("no jacobians supplied");
    }
    const Eigen::Index dim = jacobians.front().matrix.cols();
    FisherDiag out = FisherDiag::zero(dim, 1);
    out.step_count = 1;
    for (const PixelJacobian& pj : jacobians) {
        for (Eigen::Index j = 0; j < dim; ++j) {
            double acc = 0.0;
            for (int k = 0; k < 3; ++k) {
                acc += pj.matrix(k, j) * pj.matrix(k, j);
            }
            out.values[j] += acc;
        }
    }
    out.values /= noise.sigma * noise.sigma;
    return out;
}

/// EMA mixing factor alpha_t = 0.95 (1 - t / T), decaying from 0.95 at t=0
/// to exactly 0 at t=T.
inline double ema_alpha(int t, int total_steps) {
    return 0.95 * (1.0 - static_cast<double>(t) /
                             static_cast<double>(total_steps));
}

/// One online Fisher update:
/// out_j = alpha_t state_j + (1 - alpha_t) grad_j^2. One fused
/// multiply-add per parameter.
inline FisherDiag ema_update(const FisherDiag& state, const ParamVector& grad,
                             int t) {
    if (t < 0 || t > state.total_steps) {
        throw std::invalid_argument("step index outside [0, T]");
    }
    if (grad.size() != state.values.size()) {
        throw std::invalid_argument("dimension mismatch");
    }
    const double alpha = ema_alpha(t, state.total_steps);
    const double blend = 1.0 - alpha;
    FisherDiag out = state;
    out.step_count = t;
    for (Eigen::Index j = 0; j < out.values.size(); ++j) {
        const double g = grad[j];
        out.values[j] = std::fma(alpha, state.values[j], blend * g * g);
    }
    return out;
}

/// Tikhonov-regularized diagonal Laplace covariance: 1 / (fisher + lambda).
inline CovDiag laplace_cov(const FisherDiag& fisher,
                           double lambda = kDefaultLambda) {
    if (!(lambda > 0.0)) {
        throw std::invalid_argument("lambda must be positive");
    }
    CovDiag out;
    out.lambda = lambda;
    out.values = (fisher.values.array() + lambda).inverse();
    return out;
}

} // namespace uqsplat
