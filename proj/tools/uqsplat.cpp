/* SPDX-FileCopyrightText: 2026 uqsplat Authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "uqsplat/uqsplat.hpp"

namespace fs = std::filesystem;
using namespace uqsplat;

namespace {

struct NumericalFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string view_name(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "view_%03zu.ppm", i);
    return buf;
}

Image add_pixel_noise(Image img, double std_dev, std::uint64_t seed) {
    if (std_dev <= 0.0) {
        return img;
    }
    std::mt19937_64 engine = make_engine(seed);
    std::normal_distribution<double> normal(0.0, std_dev);
    for (double& v : img.pixels) {
        v = std::clamp(v + normal(engine), 0.0, 1.0);
    }
    return img;
}

int run_synth(const std::string& preset_name, std::uint64_t seed,
              const fs::path& out, double noise) {
    const Preset preset = make_preset(preset_name);
    fs::create_directories(out);

    save_scene(preset.scene, out / "scene.json");
    save_scene(make_init_scene(preset.scene, seed), out / "init.json");

    std::vector<std::string> names;
    for (std::size_t i = 0; i < preset.train_views.size(); ++i) {
        const CameraPose& cam = preset.train_views[i];
        Image img = render(preset.scene, cam).image;
        img = add_pixel_noise(std::move(img), noise,
                              derive_seed(seed, 500 + i));
        names.push_back(view_name(i));
        write_ppm(img, out / names.back());
    }
    save_views(preset.train_views, names, out / "views.json");
    save_cameras(preset.train_views, out / "cameras.json");
    save_candidate_spec(preset.candidates, out / "candidates.json");
    save_cameras(preset.heldout_views, out / "heldout.json");
    std::printf("synth: wrote %s preset (%zu views) to %s\n",
                preset_name.c_str(), names.size(), out.string().c_str());
    return 0;
}

int run_render(const fs::path& scene_file, const CameraPose& cam,
               const fs::path& out, bool masks) {
    const SceneParams scene = load_scene(scene_file);
    fs::create_directories(out);
    const RenderResult result = render(scene, cam);
    write_ppm(result.image, out / "render.ppm");
    if (masks) {
        for (const ObjectMask& m : result.masks) {
            ScalarMap map(m.width, m.height);
            map.values = m.values;
            write_pgm16(map, out / ("mask_" + std::to_string(m.object_id) +
                                    ".pgm"));
        }
    }
    std::printf("render: wrote %s\n", (out / "render.ppm").string().c_str());
    return 0;
}

int run_fit(const fs::path& init_file, const fs::path& views_file,
            const fs::path& out, TrainConfig config, int checkpoint_every) {
    const SceneParams init = load_scene(init_file);
    const std::vector<TrainView> views = load_views(views_file);
    fs::create_directories(out);

    config.checkpoint_interval = checkpoint_every;
    if (checkpoint_every > 0) {
        config.checkpoint_hook = [&out](int step, const SceneParams& scene,
                                        const FisherDiag& fisher) {
            const std::string tag = "checkpoint_" + std::to_string(step);
            save_scene(scene, out / (tag + ".json"));
            save_fisher(fisher, out / (tag + ".fisher.json"));
        };
    }

    const TrainResult result = train(init, views, config);
    save_scene(result.scene, out / "fitted.json");
    save_fisher(result.fisher, out / "fitted.fisher.json");
    write_trace_csv(result.trace, out / "trace.csv");
    std::printf("fit: %d steps, final loss %s\n", config.total_steps,
                fmt_real(result.trace.steps.back().loss).c_str());
    return 0;
}

int run_uncertainty(const fs::path& scene_file, const fs::path& fisher_file,
                    const fs::path& cameras_file, const fs::path& out,
                    double lambda) {
    const SceneParams scene = load_scene(scene_file);
    const FisherDiag fisher = load_fisher(fisher_file);
    const std::vector<CameraPose> cameras = load_cameras(cameras_file);
    if (fisher.values.size() !=
        static_cast<Eigen::Index>(scene.param_dim())) {
        throw std::invalid_argument("fisher sidecar dimension mismatch");
    }
    fs::create_directories(out);

    const CovDiag cov = laplace_cov(fisher, lambda);
    save_cov(cov, out / "laplace.cov.json");

    std::vector<ObjectScore> scores;
    for (std::size_t v = 0; v < cameras.size(); ++v) {
        const ScalarMap heat = variance_heatmap(scene, cameras[v], cov);
        char buf[32];
        std::snprintf(buf, sizeof(buf), "heatmap_%03zu.pgm", v);
        write_pgm16(heat, out / buf);
        for (int k : detail::distinct_object_ids(scene)) {
            scores.push_back(
                object_score(scene, cameras[v], cov, k, static_cast<int>(v)));
        }
    }
    write_scores_csv(scores, out / "scores.csv");
    std::printf("uncertainty: %zu heatmaps, %zu scores\n", cameras.size(),
                scores.size());
    return 0;
}

int run_nbv(const fs::path& scene_file, const fs::path& fisher_file,
            const fs::path& candidates_file, const fs::path& out,
            double lambda, const std::vector<int>& objects) {
    const SceneParams scene = load_scene(scene_file);
    const FisherDiag fisher = load_fisher(fisher_file);
    const CandidateSpec spec = load_candidate_spec(candidates_file);
    fs::create_directories(out);

    const CovDiag cov = laplace_cov(fisher, lambda);
    const std::optional<std::vector<int>> ks =
        objects.empty() ? std::nullopt
                        : std::optional<std::vector<int>>(objects);
    const NbvDecision decision =
        select_next_view(scene, cov, generate_candidates(spec), ks);

    write_scores_csv(decision.table, out / "nbv_scores.csv");
    std::string summary = "chosen_camera: " +
                          std::to_string(decision.chosen_id) + "\n";
    for (std::size_t i = 0; i < decision.aggregates.size(); ++i) {
        summary += "candidate " + std::to_string(i) + " aggregate " +
                   fmt_real(decision.aggregates[i]) + "\n";
    }
    detail::write_text_file(out / "nbv_decision.txt", summary);
    std::printf("nbv: chose candidate %d\n", decision.chosen_id);
    return 0;
}

int run_active(const fs::path& scene_file, const fs::path& init_file,
               const fs::path& views_file, const fs::path& candidates_file,
               const fs::path& heldout_file, const fs::path& out,
               ActiveConfig config, const std::string& policy_name) {
    const SceneParams gt = load_scene(scene_file);
    const SceneParams init = load_scene(init_file);
    std::vector<TrainView> views = load_views(views_file);
    const CandidateSpec spec = load_candidate_spec(candidates_file);
    config.heldout_views = load_cameras(heldout_file);
    fs::create_directories(out);

    const ActiveReport report =
        active_capture_loop(gt, init, std::move(views), spec, config);
    write_active_report_csv(report, out / "report.csv");
    write_active_summary(report, policy_name, out / "summary.txt");
    save_scene(report.final_scene, out / "final.json");
    std::printf("active: %zu rounds, final psnr %s\n", report.rounds.size(),
                fmt_real(report.rounds.back().heldout_psnr).c_str());
    return 0;
}

struct VerifyLine {
    std::string name;
    double measured;
    double threshold;
    bool pass;
};

int run_verify(const fs::path& out, int mc_samples) {
    const Preset p = make_three_splat();
    const CameraPose cam = p.benchmark_camera;
    std::vector<VerifyLine> lines;

    // Analytic Jacobian against central differences, norm-wise per pixel.
    {
        std::mt19937_64 engine = make_engine(1);
        std::uniform_int_distribution<int> coord(0, cam.width - 1);
        std::vector<PixelCoord> pixels;
        for (int i = 0; i < 20; ++i) {
            pixels.push_back({coord(engine), coord(engine)});
        }
        const auto jacs = render_jacobian(p.scene, cam, pixels);
        double max_rel = 0.0;
        for (std::size_t i = 0; i < pixels.size(); ++i) {
            const auto fd = fd_jacobian(p.scene, cam, pixels[i], 1e-5);
            max_rel = std::max(max_rel, (jacs[i].matrix - fd).norm() /
                                            (1e-8 + fd.norm()));
        }
        lines.push_back({"jacobian_vs_fd_rel", max_rel, 1e-5,
                         max_rel < 1e-5});
    }

    const auto jacs = render_jacobian(p.scene, cam, full_pixel_grid(cam));
    const NoiseModel noise{1.0};
    const FisherDiag fisher = fisher_diag_batch(jacs, noise);

    // Diagonal Fisher against the dense matrix.
    {
        const Eigen::VectorXd full_diag = fisher_full(jacs, noise).diagonal();
        const double max_abs =
            (fisher.values - full_diag).cwiseAbs().maxCoeff();
        lines.push_back({"fisher_diag_vs_full_abs", max_abs, 1e-12,
                         max_abs < 1e-12});
    }

    // EMA schedule endpoints.
    {
        const double a0 = ema_alpha(0, 100);
        const double aT = ema_alpha(100, 100);
        lines.push_back({"ema_alpha_endpoints",
                         std::abs(a0 - 0.95) + std::abs(aT), 0.0,
                         a0 == 0.95 && aT == 0.0});
    }

    // Laplace covariance bound.
    const CovDiag cov = laplace_cov(fisher, kDefaultLambda);
    {
        const double max_cov = cov.values.maxCoeff();
        lines.push_back({"laplace_cov_bound", max_cov,
                         1.0 / kDefaultLambda,
                         max_cov <= 1.0 / kDefaultLambda});
    }

    // Monte-Carlo validation of the propagation law at small scale.
    std::string csv = "pixel_x,pixel_y,scale,analytic_trace,mc_trace,"
                      "mc_se,gap,bound\n";
    bool mc_ok = true;
    bool bound_ok = true;
    for (std::size_t i = 0; i < 3; ++i) {
        const PixelCoord px = p.benchmark_pixels[i];
        const auto jac = render_jacobian(p.scene, cam, {px})[0];
        const double analytic = pixel_variance(jac, cov).trace();
        const double hess = fd_hessian_frobenius(p.scene, cam, px, 1e-3);
        const double sigma_f =
            std::sqrt(cov.values.array().square().sum());
        for (double s : {1e-2, 1e-3}) {
            McConfig mc{mc_samples, 42 + i, s};
            const McPixelVariance res =
                mc_pixel_variance(p.scene, cam, px, cov, mc);
            const double gap = std::abs(res.covariance.trace() - s * analytic);
            const double bound =
                truncation_bound(hess, std::sqrt(s) * sigma_f) +
                3.0 * res.trace_se;
            if (s == 1e-2 && analytic > 0.0) {
                mc_ok = mc_ok && gap <= 0.05 * s * analytic;
            }
            bound_ok = bound_ok && gap <= bound;
            csv += std::to_string(px.x) + "," + std::to_string(px.y) + "," +
                   fmt_real(s) + "," + fmt_real(analytic) + "," +
                   fmt_real(res.covariance.trace()) + "," +
                   fmt_real(res.trace_se) + "," + fmt_real(gap) + "," +
                   fmt_real(bound) + "\n";
        }
    }
    lines.push_back({"mc_vs_analytic_5pct", mc_ok ? 0.0 : 1.0, 0.5, mc_ok});
    lines.push_back({"truncation_bound_holds", bound_ok ? 0.0 : 1.0, 0.5,
                     bound_ok});

    // Full-vs-diagonal covariance ratio table (reported, not asserted).
    {
        const Eigen::MatrixXd full =
            full_laplace_cov(jacs, noise, kDefaultLambda);
        csv += "param,full_cov_diag,diag_cov,ratio\n";
        for (Eigen::Index j = 0; j < cov.values.size(); ++j) {
            csv += std::to_string(j) + "," + fmt_real(full(j, j)) + "," +
                   fmt_real(cov.values[j]) + "," +
                   fmt_real(full(j, j) / cov.values[j]) + "\n";
        }
    }

    fs::create_directories(out);
    detail::write_text_file(out / "verify.csv", csv);

    bool all = true;
    for (const VerifyLine& l : lines) {
        std::printf("%-28s %-5s measured %.6e threshold %.6e\n",
                    l.name.c_str(), l.pass ? "PASS" : "FAIL", l.measured,
                    l.threshold);
        all = all && l.pass;
    }
    std::printf("verify: %s (details in %s)\n", all ? "all checks passed"
                                                    : "FAILURES present",
                (out / "verify.csv").string().c_str());
    if (!all) {
        throw NumericalFailure("verification failed");
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Posterior uncertainty for a 2D Gaussian-splat renderer: "
                 "fit, propagate, plan views"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand(
        "synth", "Generate a benchmark scene with posed views");
    std::string preset_name = "three-splat";
    std::uint64_t seed = 0;
    std::string out_dir = ".";
    double synth_noise = 0.0;
    synth->add_option("--preset", preset_name,
                      "one-splat | three-splat | two-object");
    synth->add_option("--seed", seed, "master seed");
    synth->add_option("--out", out_dir, "output directory")->required();
    synth->add_option("--noise", synth_noise,
                      "pixel noise std on generated views");

    // render
    auto* rend = app.add_subcommand("render", "Render a scene file");
    std::string scene_path;
    CameraPose cli_cam{Vec2(0.0, 0.0), 0.0, 8.0, 48, 48};
    bool masks = false;
    rend->add_option("--scene", scene_path, "scene file")->required();
    rend->add_option("--out", out_dir, "output directory")->required();
    rend->add_option("--center-x", cli_cam.center[0], "camera center x");
    rend->add_option("--center-y", cli_cam.center[1], "camera center y");
    rend->add_option("--psi", cli_cam.psi, "camera rotation");
    rend->add_option("--zoom", cli_cam.zoom, "pixels per world unit");
    rend->add_option("--width", cli_cam.width, "image width");
    rend->add_option("--height", cli_cam.height, "image height");
    rend->add_flag("--masks", masks, "also export object masks");

    // fit
    auto* fit = app.add_subcommand("fit", "Fit a scene to posed views");
    std::string views_path;
    TrainConfig train_config;
    int checkpoint_every = 0;
    std::string schedule = "round-robin";
    fit->add_option("--scene", scene_path, "initial scene file")->required();
    fit->add_option("--views", views_path, "views file")->required();
    fit->add_option("--out", out_dir, "output directory")->required();
    fit->add_option("--steps", train_config.total_steps, "total steps T");
    fit->add_option("--sigma", train_config.sigma, "pixel noise sigma");
    fit->add_option("--lambda", train_config.lambda, "Tikhonov lambda");
    fit->add_option("--seed", train_config.rng_seed, "rng seed");
    fit->add_option("--schedule", schedule, "round-robin | random");
    fit->add_option("--lr-position", train_config.rates.position, "");
    fit->add_option("--lr-log-scale", train_config.rates.log_scale, "");
    fit->add_option("--lr-phi", train_config.rates.phi, "");
    fit->add_option("--lr-opacity", train_config.rates.opacity, "");
    fit->add_option("--lr-color", train_config.rates.color, "");
    fit->add_option("--checkpoint-every", checkpoint_every,
                    "checkpoint interval in steps (0 = off)");

    // uncertainty
    auto* unc = app.add_subcommand(
        "uncertainty", "Heatmaps and object scores from a Fisher sidecar");
    std::string fisher_path;
    std::string cameras_path;
    double lambda = kDefaultLambda;
    unc->add_option("--scene", scene_path, "fitted scene file")->required();
    unc->add_option("--fisher", fisher_path, "Fisher sidecar")->required();
    unc->add_option("--cameras", cameras_path, "cameras file")->required();
    unc->add_option("--out", out_dir, "output directory")->required();
    unc->add_option("--lambda", lambda, "Tikhonov lambda");

    // nbv
    auto* nbv = app.add_subcommand("nbv", "Pick the next best view");
    std::string candidates_path;
    std::vector<int> objects;
    nbv->add_option("--scene", scene_path, "fitted scene file")->required();
    nbv->add_option("--fisher", fisher_path, "Fisher sidecar")->required();
    nbv->add_option("--candidates", candidates_path, "candidate spec file")
        ->required();
    nbv->add_option("--out", out_dir, "output directory")->required();
    nbv->add_option("--lambda", lambda, "Tikhonov lambda");
    nbv->add_option("--objects", objects,
                    "object ids to score (default: all)");

    // active
    auto* act = app.add_subcommand(
        "active", "Simulated active-capture loop");
    std::string init_path;
    std::string heldout_path;
    ActiveConfig active_config;
    std::string policy = "uncertainty";
    act->add_option("--scene", scene_path, "ground-truth scene")->required();
    act->add_option("--init", init_path, "initial scene estimate")
        ->required();
    act->add_option("--views", views_path, "initial views file")->required();
    act->add_option("--candidates", candidates_path, "candidate spec file")
        ->required();
    act->add_option("--heldout", heldout_path, "held-out cameras file")
        ->required();
    act->add_option("--out", out_dir, "output directory")->required();
    act->add_option("--rounds", active_config.rounds, "capture rounds");
    act->add_option("--seed", active_config.seed, "master seed");
    act->add_option("--policy", policy, "uncertainty | random");
    act->add_option("--steps", active_config.train.total_steps,
                    "train steps per round");
    act->add_option("--sigma", active_config.train.sigma, "noise sigma");
    act->add_option("--lambda", active_config.train.lambda,
                    "Tikhonov lambda");
    act->add_option("--noise", active_config.view_noise_std,
                    "pixel noise std on captured views");
    act->add_option("--psnr-threshold", active_config.psnr_threshold,
                    "reported PSNR threshold");
    act->add_option("--objects", objects,
                    "object ids to score (default: all)");

    // verify
    auto* ver = app.add_subcommand(
        "verify", "Run the oracle suite and print a pass/fail table");
    int mc_samples = 20000;
    ver->add_option("--out", out_dir, "output directory")->required();
    ver->add_option("--mc-samples", mc_samples, "Monte-Carlo sample count");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*synth) {
            return run_synth(preset_name, seed, out_dir, synth_noise);
        }
        if (*rend) {
            validate_camera(cli_cam);
            return run_render(scene_path, cli_cam, out_dir, masks);
        }
        if (*fit) {
            if (schedule == "round-robin") {
                train_config.schedule = ViewSchedule::kRoundRobin;
            } else if (schedule == "random") {
                train_config.schedule = ViewSchedule::kRandom;
            } else {
                throw std::invalid_argument("--schedule must be "
                                            "round-robin or random");
            }
            return run_fit(scene_path, views_path, out_dir, train_config,
                           checkpoint_every);
        }
        if (*unc) {
            return run_uncertainty(scene_path, fisher_path, cameras_path,
                                   out_dir, lambda);
        }
        if (*nbv) {
            return run_nbv(scene_path, fisher_path, candidates_path, out_dir,
                           lambda, objects);
        }
        if (*act) {
            if (policy == "uncertainty") {
                active_config.policy = NbvPolicy::kUncertainty;
            } else if (policy == "random") {
                active_config.policy = NbvPolicy::kRandom;
            } else {
                throw std::invalid_argument("--policy must be uncertainty "
                                            "or random");
            }
            if (!objects.empty()) {
                active_config.objects = objects;
            }
            return run_active(scene_path, init_path, views_path,
                              candidates_path, heldout_path, out_dir,
                              active_config, policy);
        }
        if (*ver) {
            return run_verify(out_dir, mc_samples);
        }
    } catch (const NumericalFailure& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 2;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return 1;
    } catch (const std::runtime_error& e) {
        const std::string what = e.what();
        if (what.find("non-finite") != std::string::npos) {
            std::fprintf(stderr, "numerical failure: %s\n", e.what());
            return 2;
        }
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
