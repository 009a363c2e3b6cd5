/* SPDX-FileCopyrightText: 2026 uqsplat Authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "uqsplat/camera.hpp"
#include "uqsplat/fisher.hpp"
#include "uqsplat/image.hpp"
#include "uqsplat/nbv.hpp"
#include "uqsplat/propagation.hpp"
#include "uqsplat/scene.hpp"
#include "uqsplat/train.hpp"

namespace uqsplat {

/// Serializes a real with 17 significant digits, enough for an exact
/// round trip of any 64-bit float.
inline std::string fmt_real(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
}

namespace detail {

inline void write_text_file(const std::filesystem::path& path,
                            const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open for writing: " + path.string());
    }
    out << content;
    if (!out) {
        throw std::runtime_error("write failed: " + path.string());
    }
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open: " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline nlohmann::json parse_json(const std::filesystem::path& path) {
    try {
        return nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error(path.string() + ": " + e.what());
    }
}

inline const nlohmann::json& require_field(const nlohmann::json& obj,
                                           const char* name,
                                           const std::string& context) {
    if (!obj.is_object()) {
        throw std::runtime_error(context + ": expected an object");
    }
    auto it = obj.find(name);
    if (it == obj.end()) {
        throw std::runtime_error(context + ": missing field '" + name + "'");
    }
    return *it;
}

inline void reject_unknown(const nlohmann::json& obj,
                           std::initializer_list<const char*> allowed,
                           const std::string& context) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* a : allowed) {
            if (it.key() == a) {
                known = true;
                break;
            }
        }
        if (!known) {
            throw std::runtime_error(context + ": unknown field '" +
                                     it.key() + "'");
        }
    }
}

inline double as_real(const nlohmann::json& v, const std::string& context) {
    if (!v.is_number()) {
        throw std::runtime_error(context + ": expected a number");
    }
    return v.get<double>();
}

inline int as_int(const nlohmann::json& v, const std::string& context) {
    if (!v.is_number_integer()) {
        throw std::runtime_error(context + ": expected an integer");
    }
    return v.get<int>();
}

inline Vec2 as_vec2(const nlohmann::json& v, const std::string& context) {
    if (!v.is_array() || v.size() != 2) {
        throw std::runtime_error(context + ": expected an array of 2 reals");
    }
    return {as_real(v[0], context), as_real(v[1], context)};
}

inline Vec3 as_vec3(const nlohmann::json& v, const std::string& context) {
    if (!v.is_array() || v.size() != 3) {
        throw std::runtime_error(context + ": expected an array of 3 reals");
    }
    return {as_real(v[0], context), as_real(v[1], context),
            as_real(v[2], context)};
}

inline std::string real_array(const double* data, std::size_t n) {
    std::string out = "[";
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0) {
            out += ", ";
        }
        out += fmt_real(data[i]);
    }
    out += "]";
    return out;
}

inline std::string camera_json(const CameraPose& cam, int indent) {
    const std::string pad(indent, ' ');
    std::string out = "{\n";
    out += pad + "  \"center\": " + real_array(cam.center.data(), 2) + ",\n";
    out += pad + "  \"psi\": " + fmt_real(cam.psi) + ",\n";
    out += pad + "  \"zoom\": " + fmt_real(cam.zoom) + ",\n";
    out += pad + "  \"width\": " + std::to_string(cam.width) + ",\n";
    out += pad + "  \"height\": " + std::to_string(cam.height) + "\n";
    out += pad + "}";
    return out;
}

inline CameraPose parse_camera(const nlohmann::json& j,
                               const std::string& context) {
    reject_unknown(j, {"center", "psi", "zoom", "width", "height"}, context);
    CameraPose cam;
    cam.center = as_vec2(require_field(j, "center", context), context);
    cam.psi = as_real(require_field(j, "psi", context), context);
    cam.zoom = as_real(require_field(j, "zoom", context), context);
    cam.width = as_int(require_field(j, "width", context), context);
    cam.height = as_int(require_field(j, "height", context), context);
    validate_camera(cam);
    return cam;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Scene files

inline void save_scene(const SceneParams& scene,
                       const std::filesystem::path& path) {
    std::string out = "{\n  \"background\": " +
                      detail::real_array(scene.background.data(), 3) +
                      ",\n  \"splats\": [\n";
    for (std::size_t i = 0; i < scene.splats.size(); ++i) {
        const GaussianSplat& s = scene.splats[i];
        out += "    {\n";
        out += "      \"mu\": " + detail::real_array(s.mu.data(), 2) + ",\n";
        out += "      \"log_scale\": " +
               detail::real_array(s.log_scale.data(), 2) + ",\n";
        out += "      \"phi\": " + fmt_real(s.phi) + ",\n";
        out += "      \"opacity_logit\": " + fmt_real(s.opacity_logit) + ",\n";
        out += "      \"color_logit\": " +
               detail::real_array(s.color_logit.data(), 3) + ",\n";
        out += "      \"depth_rank\": " + std::to_string(s.depth_rank) + ",\n";
        out += "      \"object_id\": " + std::to_string(s.object_id) + "\n";
        out += (i + 1 < scene.splats.size()) ? "    },\n" : "    }\n";
    }
    out += "  ]\n}\n";
    detail::write_text_file(path, out);
}

inline SceneParams load_scene(const std::filesystem::path& path) {
    const nlohmann::json j = detail::parse_json(path);
    const std::string context = path.filename().string();
    detail::reject_unknown(j, {"background", "splats"}, context);
    SceneParams scene;
    scene.background =
        detail::as_vec3(detail::require_field(j, "background", context),
                        context + ": background");
    const nlohmann::json& splats =
        detail::require_field(j, "splats", context);
    if (!splats.is_array()) {
        throw std::runtime_error(context + ": 'splats' must be an array");
    }
    for (std::size_t i = 0; i < splats.size(); ++i) {
        const std::string sctx = context + ": splat " + std::to_string(i);
        const nlohmann::json& sj = splats[i];
        detail::reject_unknown(sj,
                               {"mu", "log_scale", "phi", "opacity_logit",
                                "color_logit", "depth_rank", "object_id"},
                               sctx);
        GaussianSplat s;
        s.mu = detail::as_vec2(detail::require_field(sj, "mu", sctx), sctx);
        s.log_scale = detail::as_vec2(
            detail::require_field(sj, "log_scale", sctx), sctx);
        s.phi = detail::as_real(detail::require_field(sj, "phi", sctx), sctx);
        s.opacity_logit = detail::as_real(
            detail::require_field(sj, "opacity_logit", sctx), sctx);
        s.color_logit = detail::as_vec3(
            detail::require_field(sj, "color_logit", sctx), sctx);
        s.depth_rank = detail::as_int(
            detail::require_field(sj, "depth_rank", sctx), sctx);
        s.object_id = detail::as_int(
            detail::require_field(sj, "object_id", sctx), sctx);
        scene.splats.push_back(s);
    }
    validate_scene(scene);
    return scene;
}

// ---------------------------------------------------------------------------
// Fisher / covariance sidecars

inline void save_fisher(const FisherDiag& fisher,
                        const std::filesystem::path& path) {
    std::string out = "{\n  \"values\": " +
                      detail::real_array(fisher.values.data(),
                                         static_cast<std::size_t>(
                                             fisher.values.size())) +
                      ",\n  \"step_count\": " +
                      std::to_string(fisher.step_count) +
                      ",\n  \"total_steps\": " +
                      std::to_string(fisher.total_steps) + "\n}\n";
    detail::write_text_file(path, out);
}

inline FisherDiag load_fisher(const std::filesystem::path& path) {
    const nlohmann::json j = detail::parse_json(path);
    const std::string context = path.filename().string();
    detail::reject_unknown(j, {"values", "step_count", "total_steps"},
                           context);
    const nlohmann::json& values =
        detail::require_field(j, "values", context);
    if (!values.is_array()) {
        throw std::runtime_error(context + ": 'values' must be an array");
    }
    FisherDiag out;
    out.values.resize(static_cast<Eigen::Index>(values.size()));
    for (std::size_t i = 0; i < values.size(); ++i) {
        out.values[static_cast<Eigen::Index>(i)] =
            detail::as_real(values[i], context);
    }
    out.step_count = detail::as_int(
        detail::require_field(j, "step_count", context), context);
    out.total_steps = detail::as_int(
        detail::require_field(j, "total_steps", context), context);
    return out;
}

inline void save_cov(const CovDiag& cov, const std::filesystem::path& path) {
    std::string out =
        "{\n  \"values\": " +
        detail::real_array(cov.values.data(),
                           static_cast<std::size_t>(cov.values.size())) +
        ",\n  \"lambda\": " + fmt_real(cov.lambda) + "\n}\n";
    detail::write_text_file(path, out);
}

inline CovDiag load_cov(const std::filesystem::path& path) {
    const nlohmann::json j = detail::parse_json(path);
    const std::string context = path.filename().string();
    detail::reject_unknown(j, {"values", "lambda"}, context);
    const nlohmann::json& values =
        detail::require_field(j, "values", context);
    if (!values.is_array()) {
        throw std::runtime_error(context + ": 'values' must be an array");
    }
    CovDiag out;
    out.values.resize(static_cast<Eigen::Index>(values.size()));
    for (std::size_t i = 0; i < values.size(); ++i) {
        out.values[static_cast<Eigen::Index>(i)] =
            detail::as_real(values[i], context);
    }
    out.lambda = detail::as_real(detail::require_field(j, "lambda", context),
                                 context);
    return out;
}

// ---------------------------------------------------------------------------
// PPM / PGM

/// Binary PPM, maxval 255, each channel rounded half-up from [0,1].
inline void write_ppm(const Image& img, const std::filesystem::path& path) {
    std::string out = "P6\n" + std::to_string(img.width) + " " +
                      std::to_string(img.height) + "\n255\n";
    out.reserve(out.size() + img.pixels.size());
    for (double v : img.pixels) {
        const double clamped = std::min(1.0, std::max(0.0, v));
        out.push_back(static_cast<char>(
            static_cast<unsigned char>(std::floor(clamped * 255.0 + 0.5))));
    }
    detail::write_text_file(path, out);
}

inline Image read_ppm(const std::filesystem::path& path) {
    const std::string raw = detail::read_text_file(path);
    std::istringstream in(raw);
    std::string magic;
    in >> magic;
    if (magic != "P6") {
        throw std::runtime_error(path.string() + ": not a binary PPM");
    }
    auto next_token = [&in, &path]() {
        std::string tok;
        while (in >> tok) {
            if (tok[0] == '#') {
                std::string rest;
                std::getline(in, rest);
                continue;
            }
            return tok;
        }
        throw std::runtime_error(path.string() + ": truncated PPM header");
    };
    const int width = std::stoi(next_token());
    const int height = std::stoi(next_token());
    const int maxval = std::stoi(next_token());
    if (maxval != 255) {
        throw std::runtime_error(path.string() + ": expected maxval 255");
    }
    in.get(); // single whitespace after maxval
    const std::size_t need = 3u * width * height;
    const std::size_t start = static_cast<std::size_t>(in.tellg());
    if (raw.size() - start < need) {
        throw std::runtime_error(path.string() + ": truncated PPM payload");
    }
    Image img(width, height);
    for (std::size_t i = 0; i < need; ++i) {
        img.pixels[i] =
            static_cast<unsigned char>(raw[start + i]) / 255.0;
    }
    return img;
}

/// Binary 16-bit PGM (big-endian samples) with linear scaling; the scaling
/// range is recorded in a "<path>.minmax.txt" sidecar.
inline void write_pgm16(const ScalarMap& map,
                        const std::filesystem::path& path) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (double v : map.values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (map.values.empty()) {
        lo = hi = 0.0;
    }
    const double span = hi - lo;
    std::string out = "P5\n" + std::to_string(map.width) + " " +
                      std::to_string(map.height) + "\n65535\n";
    out.reserve(out.size() + 2 * map.values.size());
    for (double v : map.values) {
        const double scaled =
            span > 0.0 ? (v - lo) / span * 65535.0 : 0.0;
        const unsigned sample =
            static_cast<unsigned>(std::floor(scaled + 0.5));
        out.push_back(static_cast<char>((sample >> 8) & 0xFF));
        out.push_back(static_cast<char>(sample & 0xFF));
    }
    detail::write_text_file(path, out);
    detail::write_text_file(path.string() + ".minmax.txt",
                            "min " + fmt_real(lo) + "\nmax " + fmt_real(hi) +
                                "\n");
}

// ---------------------------------------------------------------------------
// Views / candidates files

inline void save_views(const std::vector<CameraPose>& cameras,
                       const std::vector<std::string>& image_names,
                       const std::filesystem::path& path) {
    if (cameras.size() != image_names.size()) {
        throw std::invalid_argument("length mismatch");
    }
    std::string out = "{\n  \"views\": [\n";
    for (std::size_t i = 0; i < cameras.size(); ++i) {
        out += "    {\n      \"camera\": ";
        out += detail::camera_json(cameras[i], 6);
        out += ",\n      \"image\": \"" + image_names[i] + "\"\n    }";
        out += (i + 1 < cameras.size()) ? ",\n" : "\n";
    }
    out += "  ]\n}\n";
    detail::write_text_file(path, out);
}

/// Loads posed views; image paths resolve relative to the views file.
inline std::vector<TrainView> load_views(const std::filesystem::path& path) {
    const nlohmann::json j = detail::parse_json(path);
    const std::string context = path.filename().string();
    detail::reject_unknown(j, {"views"}, context);
    const nlohmann::json& views = detail::require_field(j, "views", context);
    if (!views.is_array() || views.empty()) {
        throw std::runtime_error(context +
                                 ": 'views' must be a nonempty array");
    }
    std::vector<TrainView> out;
    const std::filesystem::path base = path.parent_path();
    for (std::size_t i = 0; i < views.size(); ++i) {
        const std::string vctx = context + ": view " + std::to_string(i);
        detail::reject_unknown(views[i], {"camera", "image"}, vctx);
        TrainView v;
        v.camera = detail::parse_camera(
            detail::require_field(views[i], "camera", vctx), vctx);
        const nlohmann::json& image =
            detail::require_field(views[i], "image", vctx);
        if (!image.is_string()) {
            throw std::runtime_error(vctx + ": 'image' must be a string");
        }
        v.image = read_ppm(base / image.get<std::string>());
        if (v.image.width != v.camera.width ||
            v.image.height != v.camera.height) {
            throw std::runtime_error(vctx + ": image extent mismatch");
        }
        out.push_back(std::move(v));
    }
    return out;
}

inline void save_cameras(const std::vector<CameraPose>& cameras,
                         const std::filesystem::path& path) {
    std::string out = "{\n  \"cameras\": [\n";
    for (std::size_t i = 0; i < cameras.size(); ++i) {
        out += "    " ;
        out += detail::camera_json(cameras[i], 4);
        out += (i + 1 < cameras.size()) ? ",\n" : "\n";
    }
    out += "  ]\n}\n";
    detail::write_text_file(path, out);
}

inline std::vector<CameraPose> load_cameras(
    const std::filesystem::path& path) {
    const nlohmann::json j = detail::parse_json(path);
    const std::string context = path.filename().string();
    detail::reject_unknown(j, {"cameras"}, context);
    const nlohmann::json& cams = detail::require_field(j, "cameras", context);
    if (!cams.is_array()) {
        throw std::runtime_error(context + ": 'cameras' must be an array");
    }
    std::vector<CameraPose> out;
    for (std::size_t i = 0; i < cams.size(); ++i) {
        out.push_back(detail::parse_camera(
            cams[i], context + ": camera " + std::to_string(i)));
    }
    return out;
}

inline void save_candidate_spec(const CandidateSpec& spec,
                                const std::filesystem::path& path) {
    std::string out;
    if (spec.ring.has_value()) {
        const RingSpec& r = *spec.ring;
        out = "{\n  \"ring\": {\n";
        out += "    \"center\": " + detail::real_array(r.center.data(), 2) +
               ",\n";
        out += "    \"radius\": " + fmt_real(r.radius) + ",\n";
        out += "    \"zoom\": " + fmt_real(r.zoom) + ",\n";
        out += "    \"count\": " + std::to_string(r.count) + ",\n";
        out += "    \"width\": " + std::to_string(r.width) + ",\n";
        out += "    \"height\": " + std::to_string(r.height) + "\n  }\n}\n";
    } else {
        out = "{\n  \"explicit\": [\n";
        for (std::size_t i = 0; i < spec.explicit_poses.size(); ++i) {
            out += "    ";
            out += detail::camera_json(spec.explicit_poses[i], 4);
            out += (i + 1 < spec.explicit_poses.size()) ? ",\n" : "\n";
        }
        out += "  ]\n}\n";
    }
    detail::write_text_file(path, out);
}

inline CandidateSpec load_candidate_spec(const std::filesystem::path& path) {
    const nlohmann::json j = detail::parse_json(path);
    const std::string context = path.filename().string();
    detail::reject_unknown(j, {"ring", "explicit"}, context);
    CandidateSpec spec;
    if (j.contains("ring")) {
        const nlohmann::json& r = j["ring"];
        const std::string rctx = context + ": ring";
        detail::reject_unknown(
            r, {"center", "radius", "zoom", "count", "width", "height"},
            rctx);
        RingSpec ring;
        ring.center =
            detail::as_vec2(detail::require_field(r, "center", rctx), rctx);
        ring.radius =
            detail::as_real(detail::require_field(r, "radius", rctx), rctx);
        ring.zoom =
            detail::as_real(detail::require_field(r, "zoom", rctx), rctx);
        ring.count =
            detail::as_int(detail::require_field(r, "count", rctx), rctx);
        ring.width =
            detail::as_int(detail::require_field(r, "width", rctx), rctx);
        ring.height =
            detail::as_int(detail::require_field(r, "height", rctx), rctx);
        spec.ring = ring;
        return spec;
    }
    if (j.contains("explicit")) {
        const nlohmann::json& list = j["explicit"];
        if (!list.is_array()) {
            throw std::runtime_error(context +
                                     ": 'explicit' must be an array");
        }
        for (std::size_t i = 0; i < list.size(); ++i) {
            spec.explicit_poses.push_back(detail::parse_camera(
                list[i], context + ": pose " + std::to_string(i)));
        }
        return spec;
    }
    throw std::runtime_error(context + ": missing field 'ring'");
}

// ---------------------------------------------------------------------------
// CSV exports

inline void write_scores_csv(const std::vector<ObjectScore>& scores,
                             const std::filesystem::path& path) {
    std::string out = "view_id,object_id,score,pixel_count\n";
    for (const ObjectScore& s : scores) {
        out += std::to_string(s.view_id) + "," +
               std::to_string(s.object_id) + "," + fmt_real(s.score) + "," +
               std::to_string(s.pixel_count) + "\n";
    }
    detail::write_text_file(path, out);
}

inline void write_trace_csv(const TrainTrace& trace,
                            const std::filesystem::path& path) {
    std::string out = "step,view_id,loss,grad_norm,alpha\n";
    for (const TrainStepRecord& r : trace.steps) {
        out += std::to_string(r.step) + "," + std::to_string(r.view_id) +
               "," + fmt_real(r.loss) + "," + fmt_real(r.grad_norm) + "," +
               fmt_real(r.alpha) + "\n";
    }
    detail::write_text_file(path, out);
}

inline void write_active_report_csv(const ActiveReport& report,
                                    const std::filesystem::path& path) {
    std::string out =
        "round,chosen_id,center_x,center_y,psi,zoom,chosen_score,"
        "heldout_psnr,final_loss\n";
    for (const RoundRecord& r : report.rounds) {
        out += std::to_string(r.round) + "," + std::to_string(r.chosen_id) +
               "," + fmt_real(r.chosen_pose.center[0]) + "," +
               fmt_real(r.chosen_pose.center[1]) + "," +
               fmt_real(r.chosen_pose.psi) + "," +
               fmt_real(r.chosen_pose.zoom) + "," +
               fmt_real(r.chosen_score) + "," + fmt_real(r.heldout_psnr) +
               "," + fmt_real(r.final_loss) + "\n";
    }
    detail::write_text_file(path, out);
}

inline void write_active_summary(const ActiveReport& report,
                                 const std::string& policy_name,
                                 const std::filesystem::path& path) {
    std::string out;
    out += "policy: " + policy_name + "\n";
    out += "rounds: " + std::to_string(report.rounds.size()) + "\n";
    out += "psnr_threshold: " + fmt_real(report.psnr_threshold) + "\n";
    out += "first_round_at_threshold: " +
           std::to_string(report.first_round_at_threshold) + "\n";
    if (!report.rounds.empty()) {
        out += "final_psnr: " + fmt_real(report.rounds.back().heldout_psnr) +
               "\n";
    }
    detail::write_text_file(path, out);
}

} // namespace uqsplat
