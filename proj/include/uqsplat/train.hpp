/* SPDX-FileCopyrightText: 2026 uqsplat Authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "uqsplat/fisher.hpp"
#include "uqsplat/image.hpp"
#include "uqsplat/render.hpp"
#include "uqsplat/rng.hpp"
#include "uqsplat/scene.hpp"

namespace uqsplat {

/// Per-group step sizes for the five parameter families.
struct LearningRates {
    double position = 1e-3;
    double log_scale = 1e-3;
    double phi = 1e-3;
    double opacity = 5e-2;
    double color = 5e-2;
};

inline double rate_for_slot(const LearningRates& rates, int slot) {
    switch (slot) {
    case kMuX:
    case kMuY:
        return rates.position;
    case kLogSx:
    case kLogSy:
        return rates.log_scale;
    case kPhi:
        return rates.phi;
    case kOpacityLogit:
        return rates.opacity;
    default:
        return rates.color;
    }
}

enum class ViewSchedule { kRoundRobin, kRandom };

struct TrainConfig {
    int total_steps = 200;
    LearningRates rates;
    double sigma = 1.0;
    double lambda = kDefaultLambda;
    std::uint64_t rng_seed = 0;
    ViewSchedule schedule = ViewSchedule::kRoundRobin;
    bool record_gradients = false;
    // Optional checkpoint hook, invoked every checkpoint_interval steps.
    int checkpoint_interval = 0;
    std::function<void(int, const SceneParams&, const FisherDiag&)>
        checkpoint_hook;
};

struct TrainView {
    CameraPose camera;
    Image image;
};

struct TrainStepRecord {
    int step = 0;
    int view_id = 0;
    double loss = 0.0;
    double grad_norm = 0.0;
    double alpha = 0.0;
};

struct TrainTrace {
    std::vector<TrainStepRecord> steps;
    std::vector<ParamVector> gradients; // populated when record_gradients
};

struct TrainResult {
    SceneParams scene;
    FisherDiag fisher;
    TrainTrace trace;
};

/// Plain per-group gradient-descent step: theta - lr(group(j)) * grad_j.
inline ParamVector sgd_step(const ParamVector& theta, const ParamVector& grad,
                            const LearningRates& rates) {
    if (theta.size() != grad.size()) {
        throw std::invalid_argument("length mismatch");
    }
    ParamVector out = theta;
    for (Eigen::Index j = 0; j < out.size(); ++j) {
        out[j] -= rate_for_slot(rates, static_cast<int>(j % kParamsPerSplat)) *
                  grad[j];
    }
    return out;
}

namespace detail {

struct StepEval {
    double loss = 0.0;
    ParamVector grad;
    Image pred;
};

/// Renders one view and accumulates the nll gradient in a single pass.
/// Per-pixel arithmetic matches nll_gradient over the row-major pixel grid
/// bit for bit.
inline StepEval evaluate_view(const SceneParams& scene,
                              const CameraPose& camera, const Image& gt,
                              const NoiseModel& noise) {
    const auto order = depth_order(scene);
    std::vector<ProjectedSplat> proj;
    proj.reserve(order.size());
    for (std::size_t idx : order) {
        proj.push_back(project_splat(scene.splats[idx], camera));
    }

    StepEval out;
    out.pred = Image(camera.width, camera.height);
    const Eigen::Index dim = static_cast<Eigen::Index>(scene.param_dim());
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(dim);
    Eigen::Matrix<double, 3, Eigen::Dynamic> jac(3, dim);
    std::vector<Contribution> scratch;
    const double inv_s2 = 1.0 / (noise.sigma * noise.sigma);

    for (int y = 0; y < camera.height; ++y) {
        for (int x = 0; x < camera.width; ++x) {
            const Vec2 u(static_cast<double>(x), static_cast<double>(y));
            Vec3 color;
            pixel_jacobian_into(proj, scene.background, u, jac, scratch,
                                &color);
            out.pred.set(x, y, color);
            const Vec3 r = out.pred.at(x, y) - gt.at(x, y);
            grad.noalias() += inv_s2 * (jac.transpose() * r);
        }
    }
    out.loss = nll(out.pred, gt, noise);
    out.grad = ParamVector(std::move(grad));
    return out;
}

} // namespace detail

/// Fits theta by per-group SGD over the views while accumulating the
/// diagonal Fisher EMA online. Steps are indexed t = 1..T so the final
/// update realizes alpha_T = 0.
inline TrainResult train(const SceneParams& init,
                         const std::vector<TrainView>& views,
                         const TrainConfig& config) {
    validate_scene(init);
    if (views.empty()) {
        throw std::invalid_argument("at least one view required");
    }
    for (const TrainView& v : views) {
        validate_camera(v.camera);
        if (v.image.width != v.camera.width ||
            v.image.height != v.camera.height) {
            throw std::invalid_argument("view image extent mismatch");
        }
    }
    if (config.total_steps < 1) {
        throw std::invalid_argument("total_steps must be at least 1");
    }
    for (int slot = 0; slot < kParamsPerSplat; ++slot) {
        const double lr = rate_for_slot(config.rates, slot);
        if (lr < 0.0 || !std::isfinite(lr)) {
            throw std::invalid_argument("learning rates must be nonnegative");
        }
    }
    const NoiseModel noise{config.sigma};
    validate_noise(noise);

    ParamVector theta = flatten(init);
    FisherDiag fisher =
        FisherDiag::zero(theta.size(), config.total_steps);
    TrainTrace trace;
    trace.steps.reserve(static_cast<std::size_t>(config.total_steps));

    std::mt19937_64 engine = make_engine(config.rng_seed);
    std::uniform_int_distribution<std::size_t> pick(0, views.size() - 1);

    for (int t = 1; t <= config.total_steps; ++t) {
        const std::size_t view_idx =
            config.schedule == ViewSchedule::kRoundRobin
                ? static_cast<std::size_t>(t - 1) % views.size()
                : pick(engine);
        const TrainView& view = views[view_idx];

        const SceneParams current = unflatten(theta, init);
        detail::StepEval eval =
            detail::evaluate_view(current, view.camera, view.image, noise);
        if (!std::isfinite(eval.loss)) {
            throw std::runtime_error("non-finite loss at step " +
                                     std::to_string(t) +
                                     " (divergent learning rate?)");
        }

        trace.steps.push_back({t, static_cast<int>(view_idx), eval.loss,
                               eval.grad.values.norm(),
                               ema_alpha(t, config.total_steps)});
        if (config.record_gradients) {
            trace.gradients.push_back(eval.grad);
        }

        theta = sgd_step(theta, eval.grad, config.rates);
        fisher = ema_update(fisher, eval.grad, t);

        if (config.checkpoint_hook && config.checkpoint_interval > 0 &&
            t % config.checkpoint_interval == 0) {
            config.checkpoint_hook(t, unflatten(theta, init), fisher);
        }
    }

    return {unflatten(theta, init), fisher, std::move(trace)};
}

} // namespace uqsplat
