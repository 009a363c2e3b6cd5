/* SPDX-FileCopyrightText: 2026 uqsplat Authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "uqsplat/camera.hpp"
#include "uqsplat/fisher.hpp"
#include "uqsplat/image.hpp"
#include "uqsplat/render.hpp"
#include "uqsplat/scene.hpp"

namespace uqsplat {

// Pixels with mask at or below this floor do not count toward object scores.
inline constexpr double kMaskFloor = 1e-6;

/// 3x3 channel covariance of the rendered color at one pixel.
struct PixelCov {
    Mat3 matrix = Mat3::Zero();

    double trace() const { return matrix.trace(); }
};

/// Masked, propagated uncertainty of one object in one view.
struct ObjectScore {
    int object_id = 0;
    int view_id = -1;
    double score = 0.0;
    long pixel_count = 0;
};

/// Delta-method propagation with diagonal parameter covariance:
/// Var[C(u)] = J_u diag(cov) J_u^T = sum_j cov_j col_j col_j^T.
inline PixelCov pixel_variance(const PixelJacobian& jac, const CovDiag& cov) {
    if (jac.matrix.cols() != cov.values.size()) {
        throw std::invalid_argument("dimension mismatch");
    }
    PixelCov out;
    for (Eigen::Index j = 0; j < cov.values.size(); ++j) {
        const Vec3 col = jac.matrix.col(j);
        if (col[0] == 0.0 && col[1] == 0.0 && col[2] == 0.0) {
            continue;
        }
        out.matrix.noalias() += cov.values[j] * (col * col.transpose());
    }
    return out;
}

/// Object-aware pixel covariance: (mask)^2 * pixel_variance.
inline PixelCov object_pixel_cov(const PixelJacobian& jac, const CovDiag& cov,
                                 double mask_value) {
    if (!(mask_value >= 0.0 && mask_value <= 1.0)) {
        throw std::invalid_argument("mask value outside [0,1]");
    }
    PixelCov out = pixel_variance(jac, cov);
    out.matrix *= mask_value * mask_value;
    return out;
}

namespace detail {

inline const ObjectMask& mask_for(const RenderResult& rendered, int k) {
    for (const ObjectMask& m : rendered.masks) {
        if (m.object_id == k) {
            return m;
        }
    }
    throw std::invalid_argument("unknown object id");
}

} // namespace detail

/// Uncertainty score of object k under a view: the trace of the masked
/// pixel covariance summed over pixels where the mask exceeds the floor.
inline ObjectScore object_score(const SceneParams& scene,
                                const CameraPose& camera, const CovDiag& cov,
                                int k, int view_id = -1) {
    bool known = false;
    for (const auto& s : scene.splats) {
        if (s.object_id == k) {
            known = true;
            break;
        }
    }
    if (!known) {
        throw std::invalid_argument("unknown object id");
    }

    const RenderResult rendered = render(scene, camera);
    const ObjectMask& mask = detail::mask_for(rendered, k);

    const auto order = depth_order(scene);
    std::vector<detail::ProjectedSplat> proj;
    proj.reserve(order.size());
    for (std::size_t idx : order) {
        proj.push_back(detail::project_splat(scene.splats[idx], camera));
    }

    ObjectScore out;
    out.object_id = k;
    out.view_id = view_id;
    PixelJacobian pj;
    pj.matrix.resize(3, static_cast<Eigen::Index>(scene.param_dim()));
    std::vector<detail::Contribution> scratch;
    for (int y = 0; y < camera.height; ++y) {
        for (int x = 0; x < camera.width; ++x) {
            const double m = mask.at(x, y);
            if (!(m > kMaskFloor)) {
                continue;
            }
            pj.pixel = {x, y};
            const Vec2 u(static_cast<double>(x), static_cast<double>(y));
            detail::pixel_jacobian_into(proj, scene.background, u, pj.matrix,
                                        scratch);
            out.score += object_pixel_cov(pj, cov, m).trace();
            ++out.pixel_count;
        }
    }
    return out;
}

/// Per-pixel trace of the propagated covariance over the whole view.
inline ScalarMap variance_heatmap(const SceneParams& scene,
                                  const CameraPose& camera,
                                  const CovDiag& cov) {
    validate_scene(scene);
    validate_camera(camera);

    const auto order = depth_order(scene);
    std::vector<detail::ProjectedSplat> proj;
    proj.reserve(order.size());
    for (std::size_t idx : order) {
        proj.push_back(detail::project_splat(scene.splats[idx], camera));
    }

    ScalarMap map(camera.width, camera.height);
    PixelJacobian pj;
    pj.matrix.resize(3, static_cast<Eigen::Index>(scene.param_dim()));
    std::vector<detail::Contribution> scratch;
    for (int y = 0; y < camera.height; ++y) {
        for (int x = 0; x < camera.width; ++x) {
            pj.pixel = {x, y};
            const Vec2 u(static_cast<double>(x), static_cast<double>(y));
            detail::pixel_jacobian_into(proj, scene.background, u, pj.matrix,
                                        scratch);
            map.at(x, y) = pixel_variance(pj, cov).trace();
        }
    }
    return map;
}

/// Leading term of the first-order propagation error:
/// (1/4) ||H||_F ||Sigma||_F^2.
inline double truncation_bound(double hessian_frobenius,
                               double cov_frobenius) {
    if (hessian_frobenius < 0.0 || cov_frobenius < 0.0) {
        throw std::invalid_argument("norms must be nonnegative");
    }
    return 0.25 * hessian_frobenius * cov_frobenius * cov_frobenius;
}

} // namespace uqsplat
