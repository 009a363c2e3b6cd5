/* SPDX-FileCopyrightText: 2026 uqsplat Authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "uqsplat/camera.hpp"
#include "uqsplat/fisher.hpp"
#include "uqsplat/render.hpp"
#include "uqsplat/rng.hpp"
#include "uqsplat/scene.hpp"

namespace uqsplat {

/// Monte-Carlo settings for validating the propagation law.
struct McConfig {
    int n_samples = 100000;
    std::uint64_t rng_seed = 0;
    double scale = 1.0; // covariance down-scaling s
};

struct McPixelVariance {
    Mat3 covariance = Mat3::Zero();
    double trace_se = 0.0; // standard error of the trace estimate
    int n_samples = 0;
};

namespace detail {

inline Vec3 render_pixel_at(const SceneParams& tmpl, const ParamVector& theta,
                            const CameraPose& camera, const PixelCoord& px) {
    const SceneParams scene = unflatten(theta, tmpl);
    return render_pixel(scene, camera,
                        Vec2(static_cast<double>(px.x),
                             static_cast<double>(px.y)));
}

} // namespace detail

/// Central-difference Jacobian of the rendered color at one pixel,
/// independent of the analytic path.
inline Eigen::Matrix<double, 3, Eigen::Dynamic> fd_jacobian(
    const SceneParams& scene, const CameraPose& camera, const PixelCoord& px,
    double h) {
    if (!(h > 0.0)) {
        throw std::invalid_argument("step must be positive");
    }
    const ParamVector theta = flatten(scene);
    const Eigen::Index dim = theta.size();
    Eigen::Matrix<double, 3, Eigen::Dynamic> jac(3, dim);
    for (Eigen::Index j = 0; j < dim; ++j) {
        ParamVector plus = theta;
        ParamVector minus = theta;
        plus[j] += h;
        minus[j] -= h;
        const Vec3 cp = detail::render_pixel_at(scene, plus, camera, px);
        const Vec3 cm = detail::render_pixel_at(scene, minus, camera, px);
        jac.col(j) = (cp - cm) / (2.0 * h);
    }
    return jac;
}

/// Second-order central-difference Hessians of the three channels at one
/// pixel. The stencil is symmetric in (j,l) by construction.
inline std::array<Eigen::MatrixXd, 3> fd_channel_hessians(
    const SceneParams& scene, const CameraPose& camera, const PixelCoord& px,
    double h) {
    if (!(h > 0.0)) {
        throw std::invalid_argument("step must be positive");
    }
    const ParamVector theta = flatten(scene);
    const Eigen::Index dim = theta.size();
    if (dim > kFullFisherGuard) {
        throw std::invalid_argument("full FIM restricted to desk scale");
    }

    std::array<Eigen::MatrixXd, 3> hess;
    for (auto& m : hess) {
        m = Eigen::MatrixXd::Zero(dim, dim);
    }

    const Vec3 c0 = detail::render_pixel_at(scene, theta, camera, px);
    const double inv_h2 = 1.0 / (h * h);
    for (Eigen::Index j = 0; j < dim; ++j) {
        ParamVector plus = theta;
        ParamVector minus = theta;
        plus[j] += h;
        minus[j] -= h;
        const Vec3 cp = detail::render_pixel_at(scene, plus, camera, px);
        const Vec3 cm = detail::render_pixel_at(scene, minus, camera, px);
        for (int k = 0; k < 3; ++k) {
            hess[k](j, j) = (cp[k] - 2.0 * c0[k] + cm[k]) * inv_h2;
        }
    }
    for (Eigen::Index j = 0; j < dim; ++j) {
        for (Eigen::Index l = j + 1; l < dim; ++l) {
            ParamVector pp = theta;
            ParamVector pm = theta;
            ParamVector mp = theta;
            ParamVector mm = theta;
            pp[j] += h;
            pp[l] += h;
            pm[j] += h;
            pm[l] -= h;
            mp[j] -= h;
            mp[l] += h;
            mm[j] -= h;
            mm[l] -= h;
            const Vec3 cpp = detail::render_pixel_at(scene, pp, camera, px);
            const Vec3 cpm = detail::render_pixel_at(scene, pm, camera, px);
            const Vec3 cmp = detail::render_pixel_at(scene, mp, camera, px);
            const Vec3 cmm = detail::render_pixel_at(scene, mm, camera, px);
            for (int k = 0; k < 3; ++k) {
                const double v =
                    (cpp[k] - cpm[k] - cmp[k] + cmm[k]) * 0.25 * inv_h2;
                hess[k](j, l) = v;
                hess[k](l, j) = v;
            }
        }
    }
    return hess;
}

/// Root-sum-square Frobenius norm over the three channel Hessians.
inline double fd_hessian_frobenius(const SceneParams& scene,
                                   const CameraPose& camera,
                                   const PixelCoord& px, double h) {
    const auto hess = fd_channel_hessians(scene, camera, px, h);
    double acc = 0.0;
    for (const auto& m : hess) {
        acc += m.squaredNorm();
    }
    return std::sqrt(acc);
}

/// Samples theta ~ N(theta*, s * diag(cov)) with counter-derived per-sample
/// seeds, renders the pixel, and returns the sample covariance of the
/// outputs plus a nonparametric standard error of its trace.
inline McPixelVariance mc_pixel_variance(const SceneParams& scene,
                                         const CameraPose& camera,
                                         const PixelCoord& px,
                                         const CovDiag& cov,
                                         const McConfig& mc) {
    if (mc.n_samples < 2) {
        throw std::invalid_argument("need at least 2 samples");
    }
    if (!(mc.scale > 0.0)) {
        throw std::invalid_argument("scale must be positive");
    }
    const ParamVector theta = flatten(scene);
    if (theta.size() != cov.values.size()) {
        throw std::invalid_argument("dimension mismatch");
    }
    const Eigen::VectorXd stddev =
        (mc.scale * cov.values.array()).sqrt().matrix();

    const std::size_t n = static_cast<std::size_t>(mc.n_samples);
    std::vector<Vec3> samples(n);
    ParamVector sample = theta;
    for (std::size_t i = 0; i < n; ++i) {
        std::mt19937_64 engine = make_engine(derive_seed(mc.rng_seed, i));
        std::normal_distribution<double> normal(0.0, 1.0);
        for (Eigen::Index j = 0; j < theta.size(); ++j) {
            sample[j] = theta[j] + stddev[j] * normal(engine);
        }
        samples[i] = detail::render_pixel_at(scene, sample, camera, px);
    }

    Vec3 mean = Vec3::Zero();
    for (const Vec3& s : samples) {
        mean += s;
    }
    mean /= static_cast<double>(n);

    McPixelVariance out;
    out.n_samples = mc.n_samples;
    double q_sum = 0.0;
    double q2_sum = 0.0;
    for (const Vec3& s : samples) {
        const Vec3 d = s - mean;
        out.covariance.noalias() += d * d.transpose();
        const double q = d.squaredNorm();
        q_sum += q;
        q2_sum += q * q;
    }
    out.covariance /= static_cast<double>(n - 1);
    const double q_mean = q_sum / static_cast<double>(n);
    const double q_var =
        (q2_sum - static_cast<double>(n) * q_mean * q_mean) /
        static_cast<double>(n - 1);
    out.trace_se = std::sqrt(std::max(0.0, q_var) / static_cast<double>(n));
    return out;
}

/// Dense Laplace covariance sigma^2 (J^T J + lambda I)^-1, oracle scale.
inline Eigen::MatrixXd full_laplace_cov(
    const std::vector<PixelJacobian>& jacobians, const NoiseModel& noise,
    double lambda) {
    validate_noise(noise);
    if (!(lambda > 0.0)) {
        throw std::invalid_argument("lambda must be positive");
    }
    if (jacobians.empty()) {
        throw std::invalid_argument("no jacobians supplied");
    }
    const Eigen::Index dim = jacobians.front().matrix.cols();
    if (dim > kFullFisherGuard) {
        throw std::invalid_argument("full FIM restricted to desk scale");
    }
    Eigen::MatrixXd jtj = Eigen::MatrixXd::Zero(dim, dim);
    for (const PixelJacobian& pj : jacobians) {
        jtj.noalias() += pj.matrix.transpose() * pj.matrix;
    }
    jtj.diagonal().array() += lambda;
    const Eigen::MatrixXd identity =
        Eigen::MatrixXd::Identity(dim, dim);
    Eigen::MatrixXd inv = jtj.llt().solve(identity);
    inv *= noise.sigma * noise.sigma;
    return inv;
}

} // namespace uqsplat
