/* SPDX-FileCopyrightText: 2026 uqsplat Authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

namespace uqsplat {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;

/// Numerically stable logistic map; output is strictly inside (0,1).
inline double logistic(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

/// d/dx logistic(x) expressed through the mapped value.
inline double logistic_slope(double value) { return value * (1.0 - value); }

/// One anisotropic 2D Gaussian primitive. All optimized fields are
/// unconstrained reals; opacity and color pass through the logistic map,
/// scales through exp. depth_rank and object_id are fixed inputs.
struct GaussianSplat {
    Vec2 mu{0.0, 0.0};
    Vec2 log_scale{0.0, 0.0};
    double phi = 0.0;
    double opacity_logit = 0.0;
    Vec3 color_logit{0.0, 0.0, 0.0};
    int depth_rank = 0;
    int object_id = 0;

    double opacity() const { return logistic(opacity_logit); }
    Vec3 color() const {
        return {logistic(color_logit[0]), logistic(color_logit[1]),
                logistic(color_logit[2])};
    }
};

struct SceneParams {
    std::vector<GaussianSplat> splats;
    Vec3 background{0.0, 0.0, 0.0};

    std::size_t splat_count() const { return splats.size(); }
    std::size_t param_dim() const { return 9 * splats.size(); }
};

inline constexpr int kParamsPerSplat = 9;

// Per-splat slot offsets in the canonical layout.
enum ParamSlot : int {
    kMuX = 0,
    kMuY = 1,
    kLogSx = 2,
    kLogSy = 3,
    kPhi = 4,
    kOpacityLogit = 5,
    kRLogit = 6,
    kGLogit = 7,
    kBLogit = 8,
};

/// Flattened parameter vector. Layout contract: splats in depth_rank order,
/// 9 entries each: [mu_x, mu_y, log_sx, log_sy, phi, opacity_logit,
/// r_logit, g_logit, b_logit]. Every module (Jacobian columns, Fisher
/// entries, covariance entries) indexes this layout identically.
struct ParamVector {
    Eigen::VectorXd values;

    ParamVector() = default;
    explicit ParamVector(Eigen::VectorXd v) : values(std::move(v)) {}
    static ParamVector zero(Eigen::Index dim) {
        return ParamVector(Eigen::VectorXd::Zero(dim));
    }

    Eigen::Index size() const { return values.size(); }
    double operator[](Eigen::Index i) const { return values[i]; }
    double& operator[](Eigen::Index i) { return values[i]; }
};

/// Indices of scene.splats sorted by depth_rank ascending. This is the one
/// canonical splat ordering; flatten, rendering, and Jacobian columns all
/// follow it.
inline std::vector<std::size_t> depth_order(const SceneParams& scene) {
    std::vector<std::size_t> order(scene.splats.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return scene.splats[a].depth_rank < scene.splats[b].depth_rank;
    });
    return order;
}

/// Checks structural invariants: nonempty, unique depth ranks, finite
/// optimized fields, background inside [0,1].
inline void validate_scene(const SceneParams& scene) {
    if (scene.splats.empty()) {
        throw std::invalid_argument("empty scene");
    }
    std::vector<int> ranks;
    ranks.reserve(scene.splats.size());
    for (const auto& s : scene.splats) {
        ranks.push_back(s.depth_rank);
        const bool finite = std::isfinite(s.mu[0]) && std::isfinite(s.mu[1]) &&
                            std::isfinite(s.log_scale[0]) &&
                            std::isfinite(s.log_scale[1]) &&
                            std::isfinite(s.phi) &&
                            std::isfinite(s.opacity_logit) &&
                            s.color_logit.allFinite();
        if (!finite) {
            throw std::invalid_argument("non-finite splat parameter");
        }
    }
    std::sort(ranks.begin(), ranks.end());
    if (std::adjacent_find(ranks.begin(), ranks.end()) != ranks.end()) {
        throw std::invalid_argument("duplicate depth_rank");
    }
    for (int c = 0; c < 3; ++c) {
        if (!(scene.background[c] >= 0.0 && scene.background[c] <= 1.0)) {
            throw std::invalid_argument("background channel outside [0,1]");
        }
    }
}

inline ParamVector flatten(const SceneParams& scene) {
    if (scene.splats.empty()) {
        throw std::invalid_argument("empty scene");
    }
    ParamVector theta = ParamVector::zero(
        static_cast<Eigen::Index>(scene.param_dim()));
    const auto order = depth_order(scene);
    for (std::size_t b = 0; b < order.size(); ++b) {
        const GaussianSplat& s = scene.splats[order[b]];
        const Eigen::Index off = static_cast<Eigen::Index>(kParamsPerSplat * b);
        theta[off + kMuX] = s.mu[0];
        theta[off + kMuY] = s.mu[1];
        theta[off + kLogSx] = s.log_scale[0];
        theta[off + kLogSy] = s.log_scale[1];
        theta[off + kPhi] = s.phi;
        theta[off + kOpacityLogit] = s.opacity_logit;
        theta[off + kRLogit] = s.color_logit[0];
        theta[off + kGLogit] = s.color_logit[1];
        theta[off + kBLogit] = s.color_logit[2];
    }
    return theta;
}

/// Inverse of flatten. Fixed fields (depth_rank, object_id, background) and
/// the splat list order come from the template.
inline SceneParams unflatten(const ParamVector& theta,
                             const SceneParams& tmpl) {
    if (theta.size() !=
        static_cast<Eigen::Index>(kParamsPerSplat * tmpl.splats.size())) {
        throw std::invalid_argument("dimension mismatch");
    }
    SceneParams out = tmpl;
    const auto order = depth_order(tmpl);
    for (std::size_t b = 0; b < order.size(); ++b) {
        GaussianSplat& s = out.splats[order[b]];
        const Eigen::Index off = static_cast<Eigen::Index>(kParamsPerSplat * b);
        s.mu[0] = theta[off + kMuX];
        s.mu[1] = theta[off + kMuY];
        s.log_scale[0] = theta[off + kLogSx];
        s.log_scale[1] = theta[off + kLogSy];
        s.phi = theta[off + kPhi];
        s.opacity_logit = theta[off + kOpacityLogit];
        s.color_logit[0] = theta[off + kRLogit];
        s.color_logit[1] = theta[off + kGLogit];
        s.color_logit[2] = theta[off + kBLogit];
    }
    return out;
}

inline ParamVector perturb(const ParamVector& theta, const ParamVector& delta) {
    if (theta.size() != delta.size()) {
        throw std::invalid_argument("length mismatch");
    }
    return ParamVector(theta.values + delta.values);
}

} // namespace uqsplat
