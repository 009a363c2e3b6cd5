/* SPDX-FileCopyrightText: 2026 uqsplat Authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

#include "uqsplat/camera.hpp"
#include "uqsplat/fisher.hpp"
#include "uqsplat/propagation.hpp"
#include "uqsplat/render.hpp"
#include "uqsplat/rng.hpp"
#include "uqsplat/scene.hpp"
#include "uqsplat/train.hpp"

namespace uqsplat {

/// Candidate poses on a circle: camera i sits at angle 2 pi i / n and is
/// rotated to face the ring center.
struct RingSpec {
    Vec2 center{0.0, 0.0};
    double radius = 1.0;
    double zoom = 1.0;
    int count = 1;
    int width = 1;
    int height = 1;
};

struct CandidateSpec {
    std::optional<RingSpec> ring;
    std::vector<CameraPose> explicit_poses;
};

struct Candidate {
    int id = 0;
    CameraPose camera;
};

struct CandidateSet {
    std::vector<Candidate> cameras;
};

inline CandidateSet generate_candidates(const CandidateSpec& spec) {
    CandidateSet out;
    if (spec.ring.has_value()) {
        const RingSpec& ring = *spec.ring;
        if (ring.count < 1) {
            throw std::invalid_argument("ring count must be at least 1");
        }
        for (int i = 0; i < ring.count; ++i) {
            const double angle = 2.0 * std::numbers::pi * i / ring.count;
            CameraPose cam;
            cam.center = ring.center +
                         ring.radius * Vec2(std::cos(angle), std::sin(angle));
            const Vec2 to_center = ring.center - cam.center;
            cam.psi = ring.radius > 0.0
                          ? std::atan2(to_center[1], to_center[0])
                          : 0.0;
            cam.zoom = ring.zoom;
            cam.width = ring.width;
            cam.height = ring.height;
            validate_camera(cam);
            out.cameras.push_back({i, cam});
        }
        return out;
    }
    if (spec.explicit_poses.empty()) {
        throw std::invalid_argument("candidate spec is empty");
    }
    for (std::size_t i = 0; i < spec.explicit_poses.size(); ++i) {
        validate_camera(spec.explicit_poses[i]);
        out.cameras.push_back({static_cast<int>(i), spec.explicit_poses[i]});
    }
    return out;
}

struct NbvDecision {
    int chosen_id = -1;
    std::vector<ObjectScore> table;     // per candidate x object
    std::vector<double> aggregates;     // per candidate, in candidate order
};

/// Scores every candidate by the summed object uncertainty and picks the
/// argmax. Ties break toward the lowest camera id.
inline NbvDecision select_next_view(
    const SceneParams& scene, const CovDiag& cov,
    const CandidateSet& candidates,
    const std::optional<std::vector<int>>& objects = std::nullopt) {
    if (candidates.cameras.empty()) {
        throw std::invalid_argument("candidate set is empty");
    }
    const std::vector<int> ks =
        objects.has_value() ? *objects : detail::distinct_object_ids(scene);

    NbvDecision decision;
    decision.aggregates.reserve(candidates.cameras.size());
    for (const Candidate& cand : candidates.cameras) {
        double aggregate = 0.0;
        for (int k : ks) {
            ObjectScore s = object_score(scene, cand.camera, cov, k, cand.id);
            aggregate += s.score;
            decision.table.push_back(s);
        }
        decision.aggregates.push_back(aggregate);
    }

    int best = 0;
    for (std::size_t i = 1; i < decision.aggregates.size(); ++i) {
        if (decision.aggregates[i] > decision.aggregates[best]) {
            best = static_cast<int>(i);
        }
    }
    decision.chosen_id = candidates.cameras[static_cast<std::size_t>(best)].id;
    return decision;
}

enum class NbvPolicy { kUncertainty, kRandom };

struct ActiveConfig {
    int rounds = 1;
    TrainConfig train;
    NbvPolicy policy = NbvPolicy::kUncertainty;
    std::optional<std::vector<int>> objects; // nullopt: score all objects
    std::vector<CameraPose> heldout_views;
    double view_noise_std = 0.0; // optional pixel noise on synthesized views
    std::uint64_t seed = 0;
    double psnr_threshold = 30.0;
};

struct RoundRecord {
    int round = 0;
    int chosen_id = -1;
    CameraPose chosen_pose;
    double chosen_score = 0.0;
    std::vector<double> aggregates;
    double heldout_psnr = 0.0;
    double final_loss = 0.0;
};

struct ActiveReport {
    std::vector<RoundRecord> rounds;
    double psnr_threshold = 0.0;
    int first_round_at_threshold = -1; // -1: never reached
    SceneParams final_scene;
};

namespace detail {

inline Image synthesize_view(const SceneParams& gt_scene,
                             const CameraPose& camera, double noise_std,
                             std::uint64_t seed) {
    Image img = render(gt_scene, camera).image;
    if (noise_std > 0.0) {
        std::mt19937_64 engine = make_engine(seed);
        std::normal_distribution<double> normal(0.0, noise_std);
        for (double& v : img.pixels) {
            v = std::clamp(v + normal(engine), 0.0, 1.0);
        }
    }
    return img;
}

inline double heldout_psnr(const SceneParams& fitted,
                           const SceneParams& gt_scene,
                           const std::vector<CameraPose>& views) {
    double acc = 0.0;
    std::size_t count = 0;
    for (const CameraPose& cam : views) {
        const Image pred = render(fitted, cam).image;
        const Image gt = render(gt_scene, cam).image;
        for (std::size_t i = 0; i < pred.pixels.size(); ++i) {
            const double r = pred.pixels[i] - gt.pixels[i];
            acc += r * r;
        }
        count += pred.pixels.size();
    }
    if (count == 0 || acc == 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    return -10.0 * std::log10(acc / static_cast<double>(count));
}

} // namespace detail

/// Simulated active capture: train, score candidates, capture the chosen
/// view from the ground-truth scene, repeat. Training warm-starts from the
/// previous round's estimate.
inline ActiveReport active_capture_loop(const SceneParams& gt_scene,
                                        const SceneParams& init,
                                        std::vector<TrainView> views,
                                        const CandidateSpec& candidate_spec,
                                        const ActiveConfig& config) {
    if (config.rounds < 1) {
        throw std::invalid_argument("rounds must be at least 1");
    }
    const CandidateSet candidates = generate_candidates(candidate_spec);

    ActiveReport report;
    report.psnr_threshold = config.psnr_threshold;
    SceneParams current = init;

    for (int round = 1; round <= config.rounds; ++round) {
        TrainConfig train_config = config.train;
        train_config.rng_seed = derive_seed(config.seed, 2 * round);
        TrainResult fit = train(current, views, train_config);
        current = fit.scene;

        RoundRecord record;
        record.round = round;
        record.final_loss = fit.trace.steps.back().loss;
        record.heldout_psnr =
            detail::heldout_psnr(current, gt_scene, config.heldout_views);
        if (report.first_round_at_threshold < 0 &&
            record.heldout_psnr >= config.psnr_threshold) {
            report.first_round_at_threshold = round;
        }

        std::size_t chosen_index = 0;
        if (config.policy == NbvPolicy::kUncertainty) {
            const CovDiag cov = laplace_cov(fit.fisher, config.train.lambda);
            NbvDecision decision =
                select_next_view(current, cov, candidates, config.objects);
            record.chosen_id = decision.chosen_id;
            record.aggregates = decision.aggregates;
            for (std::size_t i = 0; i < candidates.cameras.size(); ++i) {
                if (candidates.cameras[i].id == decision.chosen_id) {
                    chosen_index = i;
                    break;
                }
            }
            record.chosen_score = decision.aggregates[chosen_index];
        } else {
            std::mt19937_64 engine =
                make_engine(derive_seed(config.seed, 2 * round + 1));
            std::uniform_int_distribution<std::size_t> pick(
                0, candidates.cameras.size() - 1);
            chosen_index = pick(engine);
            record.chosen_id = candidates.cameras[chosen_index].id;
            record.aggregates.assign(candidates.cameras.size(), 0.0);
        }
        record.chosen_pose = candidates.cameras[chosen_index].camera;

        TrainView captured;
        captured.camera = record.chosen_pose;
        captured.image = detail::synthesize_view(
            gt_scene, captured.camera, config.view_noise_std,
            derive_seed(config.seed, 1000 + round));
        views.push_back(std::move(captured));

        report.rounds.push_back(std::move(record));
    }

    report.final_scene = current;
    return report;
}

} // namespace uqsplat
