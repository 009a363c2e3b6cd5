/* SPDX-FileCopyrightText: 2026 uqsplat Authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

// Minimal library walkthrough: fit a perturbed three-splat scene, turn the
// online Fisher state into a Laplace covariance, propagate it to pixel
// space, and ask the planner for the next view.

#include <cstdio>

#include "uqsplat/uqsplat.hpp"

using namespace uqsplat;

int main() {
    const Preset preset = make_three_splat();
    const SceneParams init = make_init_scene(preset.scene, 42);

    std::vector<TrainView> views;
    for (const CameraPose& cam : preset.train_views) {
        views.push_back({cam, render(preset.scene, cam).image});
    }

    TrainConfig config;
    config.total_steps = 150;
    const TrainResult fit = train(init, views, config);
    std::printf("fit: loss %.3e -> %.3e over %d steps\n",
                fit.trace.steps.front().loss, fit.trace.steps.back().loss,
                config.total_steps);

    const CovDiag cov = laplace_cov(fit.fisher);
    const ScalarMap heat =
        variance_heatmap(fit.scene, preset.benchmark_camera, cov);
    double peak = 0.0;
    for (double v : heat.values) {
        peak = std::max(peak, v);
    }
    std::printf("pixel variance peak: %.3e\n", peak);

    for (int k : detail::distinct_object_ids(fit.scene)) {
        const ObjectScore s =
            object_score(fit.scene, preset.benchmark_camera, cov, k);
        std::printf("object %d: score %.3e over %ld pixels\n", k, s.score,
                    s.pixel_count);
    }

    const NbvDecision next = select_next_view(
        fit.scene, cov, generate_candidates(preset.candidates));
    std::printf("next best view: candidate %d\n", next.chosen_id);

    write_ppm(render(fit.scene, preset.benchmark_camera).image,
              "demo_render.ppm");
    write_pgm16(heat, "demo_heatmap.pgm");
    std::printf("wrote demo_render.ppm and demo_heatmap.pgm\n");
    return 0;
}
