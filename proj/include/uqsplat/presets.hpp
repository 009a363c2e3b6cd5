/* SPDX-FileCopyrightText: 2026 uqsplat Authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "uqsplat/camera.hpp"
#include "uqsplat/nbv.hpp"
#include "uqsplat/render.hpp"
#include "uqsplat/rng.hpp"
#include "uqsplat/scene.hpp"

namespace uqsplat {

/// A named benchmark setup: scene, training poses, candidate/held-out poses
/// for planning, and pinned probe pixels for the oracle runs.
struct Preset {
    std::string name;
    SceneParams scene;
    std::vector<CameraPose> train_views;
    CandidateSpec candidates;
    std::vector<CameraPose> heldout_views;
    CameraPose benchmark_camera;
    std::vector<PixelCoord> benchmark_pixels;
};

namespace detail {

inline GaussianSplat splat(double mx, double my, double lsx, double lsy,
                           double phi, double op, double cr, double cg,
                           double cb, int rank, int object) {
    GaussianSplat s;
    s.mu = {mx, my};
    s.log_scale = {lsx, lsy};
    s.phi = phi;
    s.opacity_logit = op;
    s.color_logit = {cr, cg, cb};
    s.depth_rank = rank;
    s.object_id = object;
    return s;
}

inline PixelCoord nearest_pixel(const CameraPose& cam, const Vec2& world) {
    const Vec2 u = world_to_pixel(cam, world);
    PixelCoord px;
    px.x = std::clamp(static_cast<int>(std::lround(u[0])), 0, cam.width - 1);
    px.y = std::clamp(static_cast<int>(std::lround(u[1])), 0, cam.height - 1);
    return px;
}

} // namespace detail

inline Preset make_one_splat() {
    Preset p;
    p.name = "one-splat";
    p.scene.background = {0.12, 0.1, 0.14};
    p.scene.splats = {
        detail::splat(0.0, 0.0, -0.5, -1.0, 0.5, 1.0, 1.2, -0.8, 0.3, 0, 0),
    };
    p.benchmark_camera = {Vec2(0.0, 0.0), 0.0, 10.0, 32, 32};
    p.train_views = {p.benchmark_camera};
    RingSpec ring{Vec2(0.0, 0.0), 0.9, 10.0, 4, 32, 32};
    p.candidates.ring = ring;
    p.heldout_views = {p.benchmark_camera};
    p.benchmark_pixels = {detail::nearest_pixel(p.benchmark_camera,
                                                p.scene.splats[0].mu)};
    return p;
}

inline Preset make_three_splat() {
    Preset p;
    p.name = "three-splat";
    p.scene.background = {0.1, 0.12, 0.15};
    p.scene.splats = {
        detail::splat(-0.9, -0.4, -0.3, -0.9, 0.4, 1.2, 1.3, 0.2, -0.8, 0, 0),
        detail::splat(0.7, -0.5, -0.6, -0.2, -0.7, 0.8, -0.4, 1.0, 0.5, 1, 0),
        detail::splat(0.0, 0.8, -0.4, -0.7, 1.1, 1.5, 0.6, -0.3, 1.2, 2, 0),
    };
    p.benchmark_camera = {Vec2(0.0, 0.0), 0.0, 8.0, 32, 32};
    p.train_views = {p.benchmark_camera};
    RingSpec ring{Vec2(0.0, 0.0), 1.2, 8.0, 6, 32, 32};
    p.candidates.ring = ring;
    p.heldout_views = {p.benchmark_camera};

    const CameraPose& cam = p.benchmark_camera;
    PixelCoord m0 = detail::nearest_pixel(cam, p.scene.splats[0].mu);
    PixelCoord m1 = detail::nearest_pixel(cam, p.scene.splats[1].mu);
    PixelCoord m2 = detail::nearest_pixel(cam, p.scene.splats[2].mu);
    // Two off-center probes inside footprints: one sigma off splat 0, and
    // the midpoint of splats 0 and 1 where the tails overlap.
    PixelCoord off0 = {m0.x + 3, m0.y + 2};
    PixelCoord mid = detail::nearest_pixel(
        cam, 0.5 * (p.scene.splats[0].mu + p.scene.splats[1].mu));
    p.benchmark_pixels = {m0, m1, m2, off0, mid};
    return p;
}

/// Two spatially separated objects. Object A (id 0) is covered by the four
/// initial ring views; object B (id 1) is far enough to the right that no
/// initial view reaches its footprint.
inline Preset make_two_object() {
    Preset p;
    p.name = "two-object";
    p.scene.background = {0.08, 0.1, 0.12};
    p.scene.splats = {
        detail::splat(-2.7, -0.35, -0.693, -1.204, 0.3, 1.3, 1.4, 0.1, -0.9,
                      0, 0),
        detail::splat(-2.05, 0.2, -0.916, -0.693, -0.6, 1.0, 0.9, -0.5, 0.6,
                      1, 0),
        detail::splat(-2.45, 0.6, -1.05, -0.916, 1.2, 1.5, -0.3, 1.1, 0.8,
                      2, 0),
        detail::splat(4.7, -0.3, -0.693, -1.05, -0.4, 1.2, -1.0, 0.8, 1.3,
                      3, 1),
        detail::splat(5.3, 0.15, -0.916, -0.693, 0.8, 1.0, 0.5, 0.9, -0.7,
                      4, 1),
        detail::splat(4.95, 0.55, -1.204, -0.916, -1.0, 1.4, 1.1, -0.2, 0.4,
                      5, 1),
    };

    RingSpec initial{Vec2(-2.4, 0.0), 0.7, 12.0, 4, 48, 48};
    CandidateSpec initial_spec;
    initial_spec.ring = initial;
    for (const Candidate& c : generate_candidates(initial_spec).cameras) {
        p.train_views.push_back(c.camera);
    }

    RingSpec candidate_ring{Vec2(1.15, 0.0), 3.85, 12.0, 8, 48, 48};
    p.candidates.ring = candidate_ring;

    p.heldout_views = {
        {Vec2(-2.4, 0.0), 0.0, 12.0, 48, 48},
        {Vec2(5.0, 0.0), 0.0, 12.0, 48, 48},
        {Vec2(1.15, 0.0), 0.0, 5.0, 48, 48},
    };
    p.benchmark_camera = p.heldout_views.back();
    p.benchmark_pixels = {
        detail::nearest_pixel(p.benchmark_camera, p.scene.splats[0].mu),
        detail::nearest_pixel(p.benchmark_camera, p.scene.splats[3].mu),
    };
    return p;
}

inline Preset make_preset(const std::string& name) {
    if (name == "one-splat") {
        return make_one_splat();
    }
    if (name == "three-splat") {
        return make_three_splat();
    }
    if (name == "two-object") {
        return make_two_object();
    }
    throw std::invalid_argument("unknown preset '" + name + "'");
}

/// Seeded starting point for fitting: the ground truth with clamped Gaussian
/// perturbations. Clamps keep every splat inside its attraction basin and
/// preserve the visibility margins of the two-object preset.
inline SceneParams make_init_scene(const SceneParams& gt,
                                   std::uint64_t seed) {
    std::mt19937_64 engine = make_engine(derive_seed(seed, 17));
    std::normal_distribution<double> normal(0.0, 1.0);
    auto draw = [&](double sigma, double clamp) {
        return std::clamp(sigma * normal(engine), -clamp, clamp);
    };
    SceneParams init = gt;
    for (GaussianSplat& s : init.splats) {
        s.mu[0] += draw(0.12, 0.25);
        s.mu[1] += draw(0.12, 0.25);
        s.log_scale[0] += draw(0.2, 0.4);
        s.log_scale[1] += draw(0.2, 0.4);
        s.phi += draw(0.3, 0.6);
        s.opacity_logit += draw(0.8, 1.6);
        s.color_logit[0] += draw(1.6, 3.2);
        s.color_logit[1] += draw(1.6, 3.2);
        s.color_logit[2] += draw(1.6, 3.2);
    }
    return init;
}

} // namespace uqsplat
