/* SPDX-FileCopyrightText: 2026 uqsplat Authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "uqsplat/camera.hpp"
#include "uqsplat/image.hpp"
#include "uqsplat/scene.hpp"

namespace uqsplat {

inline constexpr double kAlphaCap = 0.999;
// Splats beyond this squared Mahalanobis distance contribute exactly zero:
// the truncated alpha is below 2e-22, under 64-bit rounding of any
// accumulation done here.
inline constexpr double kFootprintCutoff = 50.0;

struct PixelCoord {
    int x = 0;
    int y = 0;
};

/// 3 x d sensitivity of the rendered RGB at one pixel w.r.t. the flattened
/// parameter vector. Columns follow the canonical layout; splats without
/// footprint at the pixel have exactly-zero columns.
struct PixelJacobian {
    PixelCoord pixel;
    Eigen::Matrix<double, 3, Eigen::Dynamic> matrix;
};

struct RenderResult {
    Image image;
    std::vector<ObjectMask> masks; // one per distinct object_id, ascending
};

namespace detail {

// Geometry of one splat as seen through a camera, cached per view.
// With theta = phi - psi, the projected covariance is
//   Sigma_p = zoom^2 R(theta) diag(sx^2, sy^2) R(theta)^T,
// so m^2 = (a/(zoom sx))^2 + (b/(zoom sy))^2 where (a,b) = R(theta)^T delta.
struct ProjectedSplat {
    Vec2 mean_px;      // projected mean
    double cos_t = 1.0; // cos(phi - psi)
    double sin_t = 0.0;
    double inv_zsx = 1.0; // 1 / (zoom * exp(log_sx))
    double inv_zsy = 1.0;
    double sx = 1.0; // exp(log_sx)
    double sy = 1.0;
    double opacity = 0.0;
    Vec3 color;
    Vec3 color_slope; // d color / d logit
    double opacity_slope = 0.0;
    double cos_phi = 1.0;
    double sin_phi = 0.0;
    int object_id = 0;
};

inline ProjectedSplat project_splat(const GaussianSplat& s,
                                    const CameraPose& cam) {
    ProjectedSplat p;
    p.mean_px = world_to_pixel(cam, s.mu);
    const double theta = s.phi - cam.psi;
    p.cos_t = std::cos(theta);
    p.sin_t = std::sin(theta);
    p.sx = std::exp(s.log_scale[0]);
    p.sy = std::exp(s.log_scale[1]);
    p.inv_zsx = 1.0 / (cam.zoom * p.sx);
    p.inv_zsy = 1.0 / (cam.zoom * p.sy);
    p.opacity = s.opacity();
    p.color = s.color();
    p.color_slope = {logistic_slope(p.color[0]), logistic_slope(p.color[1]),
                     logistic_slope(p.color[2])};
    p.opacity_slope = logistic_slope(p.opacity);
    p.cos_phi = std::cos(s.phi);
    p.sin_phi = std::sin(s.phi);
    p.object_id = s.object_id;
    return p;
}

// Alpha and its gradient w.r.t. the splat's own geometry + opacity slots
// [mu_x, mu_y, log_sx, log_sy, phi, opacity_logit]. Gradients are zero when
// the footprint cutoff or the alpha cap applies.
struct AlphaGrad {
    double alpha = 0.0;
    double d[6] = {0, 0, 0, 0, 0, 0};
};

inline double splat_alpha_projected(const ProjectedSplat& p, const Vec2& u) {
    const Vec2 delta = u - p.mean_px;
    const double a = p.cos_t * delta[0] + p.sin_t * delta[1];
    const double b = -p.sin_t * delta[0] + p.cos_t * delta[1];
    const double na = a * p.inv_zsx;
    const double nb = b * p.inv_zsy;
    const double m2 = na * na + nb * nb;
    if (m2 > kFootprintCutoff) {
        return 0.0;
    }
    return std::min(kAlphaCap, p.opacity * std::exp(-0.5 * m2));
}

inline AlphaGrad splat_alpha_grad(const ProjectedSplat& p, const Vec2& u) {
    AlphaGrad out;
    const Vec2 delta = u - p.mean_px;
    const double a = p.cos_t * delta[0] + p.sin_t * delta[1];
    const double b = -p.sin_t * delta[0] + p.cos_t * delta[1];
    const double na = a * p.inv_zsx; // a / (zoom sx)
    const double nb = b * p.inv_zsy;
    const double m2 = na * na + nb * nb;
    if (m2 > kFootprintCutoff) {
        return out;
    }
    const double g = std::exp(-0.5 * m2);
    const double raw = p.opacity * g;
    if (raw >= kAlphaCap) {
        out.alpha = kAlphaCap; // capped: flat region, zero gradient
        return out;
    }
    out.alpha = raw;

    // dm2/d mu = -2 na/(zoom sx) * zoom (cos phi, sin phi)
    //            -2 nb/(zoom sy) * zoom (-sin phi, cos phi)
    // (the zoom of the pixel map cancels one factor of 1/(zoom s)).
    const double ka = na / p.sx; // na / sx = a / (zoom sx^2) * ... times zoom below
    const double kb = nb / p.sy;
    const double dm2_dmux = -2.0 * (ka * p.cos_phi - kb * p.sin_phi);
    const double dm2_dmuy = -2.0 * (ka * p.sin_phi + kb * p.cos_phi);
    const double dm2_dlsx = -2.0 * na * na;
    const double dm2_dlsy = -2.0 * nb * nb;
    // da/dphi = b, db/dphi = -a in the rotated frame.
    const double dm2_dphi =
        2.0 * (na * p.inv_zsx * b - nb * p.inv_zsy * a);

    const double scale = -0.5 * raw; // d alpha / d m2
    out.d[0] = scale * dm2_dmux;
    out.d[1] = scale * dm2_dmuy;
    out.d[2] = scale * dm2_dlsx;
    out.d[3] = scale * dm2_dlsy;
    out.d[4] = scale * dm2_dphi;
    out.d[5] = p.opacity_slope * g;
    return out;
}

inline std::vector<int> distinct_object_ids(const SceneParams& scene) {
    std::vector<int> ids;
    for (const auto& s : scene.splats) {
        ids.push_back(s.object_id);
    }
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    return ids;
}

} // namespace detail

/// Alpha of one splat at pixel u: min(cap, opacity * exp(-m^2 / 2)) with the
/// footprint cutoff applied, smooth in every splat parameter below the cap.
inline double splat_alpha(const GaussianSplat& splat, const CameraPose& cam,
                          const Vec2& u) {
    return detail::splat_alpha_projected(detail::project_splat(splat, cam), u);
}

/// Front-to-back alpha compositing of one pixel. Splats must be given in
/// depth_rank order (see depth_order).
inline Vec3 render_pixel_projected(
    const std::vector<detail::ProjectedSplat>& splats, const Vec3& background,
    const Vec2& u) {
    Vec3 c = Vec3::Zero();
    double transmittance = 1.0;
    for (const auto& p : splats) {
        const double a = detail::splat_alpha_projected(p, u);
        if (a == 0.0) {
            continue;
        }
        const double w = a * transmittance;
        c += w * p.color;
        transmittance *= (1.0 - a);
    }
    return c + transmittance * background;
}

inline Vec3 render_pixel(const SceneParams& scene, const CameraPose& cam,
                         const Vec2& u) {
    const auto order = depth_order(scene);
    std::vector<detail::ProjectedSplat> proj;
    proj.reserve(order.size());
    for (std::size_t idx : order) {
        proj.push_back(detail::project_splat(scene.splats[idx], cam));
    }
    return render_pixel_projected(proj, scene.background, u);
}

/// Renders the full view and the per-object soft masks
/// M_k(u) = sum of compositing weights of object k's splats.
inline RenderResult render(const SceneParams& scene, const CameraPose& cam) {
    validate_scene(scene);
    validate_camera(cam);

    const auto order = depth_order(scene);
    std::vector<detail::ProjectedSplat> proj;
    proj.reserve(order.size());
    for (std::size_t idx : order) {
        proj.push_back(detail::project_splat(scene.splats[idx], cam));
    }

    const auto ids = detail::distinct_object_ids(scene);
    std::vector<int> id_slot(proj.size());
    for (std::size_t i = 0; i < proj.size(); ++i) {
        id_slot[i] = static_cast<int>(
            std::lower_bound(ids.begin(), ids.end(), proj[i].object_id) -
            ids.begin());
    }

    RenderResult out;
    out.image = Image(cam.width, cam.height);
    out.masks.reserve(ids.size());
    for (int k : ids) {
        out.masks.emplace_back(k, cam.width, cam.height);
    }

    for (int y = 0; y < cam.height; ++y) {
        for (int x = 0; x < cam.width; ++x) {
            const Vec2 u(static_cast<double>(x), static_cast<double>(y));
            Vec3 c = Vec3::Zero();
            double transmittance = 1.0;
            for (std::size_t i = 0; i < proj.size(); ++i) {
                const double a = detail::splat_alpha_projected(proj[i], u);
                if (a == 0.0) {
                    continue;
                }
                const double w = a * transmittance;
                c += w * proj[i].color;
                out.masks[id_slot[i]].at(x, y) += w;
                transmittance *= (1.0 - a);
            }
            out.image.set(x, y, c + transmittance * scene.background);
        }
    }
    return out;
}

namespace detail {

// Per-pixel contribution record for the compositing backward pass.
struct Contribution {
    std::size_t block;  // splat position in depth order = column block
    AlphaGrad ag;
    double weight;            // alpha * transmittance_before
    double trans_before;      // product of (1 - alpha_j) over j in front
};

/// Fills a preallocated 3 x d Jacobian for one pixel. Exact chain rule
/// through the compositing:
///   dC/d alpha_m = T_m (c_m - bg) - S_m / (1 - alpha_m),
/// with S_m the weighted color sum of everything behind m. When color_out is
/// given it receives the composited color, computed with the same operation
/// sequence as render().
inline void pixel_jacobian_into(
    const std::vector<ProjectedSplat>& proj, const Vec3& background,
    const Vec2& u, Eigen::Matrix<double, 3, Eigen::Dynamic>& jac,
    std::vector<Contribution>& scratch, Vec3* color_out = nullptr) {
    jac.setZero();
    scratch.clear();

    Vec3 color = Vec3::Zero();
    double transmittance = 1.0;
    for (std::size_t i = 0; i < proj.size(); ++i) {
        const AlphaGrad ag = splat_alpha_grad(proj[i], u);
        if (ag.alpha == 0.0) {
            continue;
        }
        Contribution c;
        c.block = i;
        c.ag = ag;
        c.trans_before = transmittance;
        c.weight = ag.alpha * transmittance;
        scratch.push_back(c);
        color += c.weight * proj[i].color;
        transmittance *= (1.0 - ag.alpha);
    }
    if (color_out != nullptr) {
        *color_out = color + transmittance * background;
    }

    // Backward scan: S accumulates sum_{i > m} w_i (c_i - bg).
    Vec3 suffix = Vec3::Zero();
    for (std::size_t r = scratch.size(); r-- > 0;) {
        const Contribution& c = scratch[r];
        const ProjectedSplat& p = proj[c.block];
        const Eigen::Index off =
            static_cast<Eigen::Index>(kParamsPerSplat * c.block);

        const Vec3 dC_dalpha =
            c.trans_before * (p.color - background) -
            suffix / (1.0 - c.ag.alpha);
        for (int slot = 0; slot < 6; ++slot) {
            if (c.ag.d[slot] != 0.0) {
                jac.col(off + slot) = dC_dalpha * c.ag.d[slot];
            }
        }
        jac(0, off + kRLogit) = c.weight * p.color_slope[0];
        jac(1, off + kGLogit) = c.weight * p.color_slope[1];
        jac(2, off + kBLogit) = c.weight * p.color_slope[2];

        suffix += c.weight * (p.color - background);
    }
}

} // namespace detail

/// Exact per-pixel Jacobians J_u = dC(u)/d theta at the given pixels.
inline std::vector<PixelJacobian> render_jacobian(
    const SceneParams& scene, const CameraPose& cam,
    const std::vector<PixelCoord>& pixels) {
    validate_scene(scene);
    validate_camera(cam);

    const auto order = depth_order(scene);
    std::vector<detail::ProjectedSplat> proj;
    proj.reserve(order.size());
    for (std::size_t idx : order) {
        proj.push_back(detail::project_splat(scene.splats[idx], cam));
    }

    const Eigen::Index dim = static_cast<Eigen::Index>(scene.param_dim());
    std::vector<PixelJacobian> out;
    out.reserve(pixels.size());
    std::vector<detail::Contribution> scratch;
    for (const PixelCoord& px : pixels) {
        if (px.x < 0 || px.x >= cam.width || px.y < 0 || px.y >= cam.height) {
            throw std::out_of_range("pixel outside image bounds");
        }
        PixelJacobian pj;
        pj.pixel = px;
        pj.matrix.resize(3, dim);
        const Vec2 u(static_cast<double>(px.x), static_cast<double>(px.y));
        detail::pixel_jacobian_into(proj, scene.background, u, pj.matrix,
                                    scratch);
        out.push_back(std::move(pj));
    }
    return out;
}

/// All pixels of the view in row-major order.
inline std::vector<PixelCoord> full_pixel_grid(const CameraPose& cam) {
    std::vector<PixelCoord> pixels;
    pixels.reserve(static_cast<std::size_t>(cam.width) * cam.height);
    for (int y = 0; y < cam.height; ++y) {
        for (int x = 0; x < cam.width; ++x) {
            pixels.push_back({x, y});
        }
    }
    return pixels;
}

} // namespace uqsplat
