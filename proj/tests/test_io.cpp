/* SPDX-FileCopyrightText: 2026 uqsplat Authors
 *
 * SPDX-License-Identifier: Apache-2.0 */

#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "uqsplat/io.hpp"
#include "uqsplat/presets.hpp"
#include "test_helpers.hpp"

using namespace uqsplat;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("uqsplat_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static inline int counter = 0;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("scene files round trip exactly") {
    TempDir tmp;
    for (std::uint64_t seed = 600; seed < 605; ++seed) {
        const SceneParams scene = testing::make_random_scene(
            seed, 1 + static_cast<int>(seed % 4), 2);
        const fs::path file = tmp.path / "scene.json";
        save_scene(scene, file);
        const SceneParams back = load_scene(file);

        CHECK(flatten(back).values == flatten(scene).values);
        CHECK(back.background == scene.background);
        for (std::size_t i = 0; i < scene.splats.size(); ++i) {
            CHECK(back.splats[i].depth_rank == scene.splats[i].depth_rank);
            CHECK(back.splats[i].object_id == scene.splats[i].object_id);
        }
    }
}

TEST_CASE("scene loading errors name the offending field") {
    TempDir tmp;
    const fs::path file = tmp.path / "bad.json";

    SECTION("missing field") {
        std::ofstream(file) << R"({"background": [0,0,0], "splats": [
            {"mu": [0,0], "log_scale": [0,0], "phi": 0,
             "color_logit": [0,0,0], "depth_rank": 0, "object_id": 0}]})";
        CHECK_THROWS_WITH(load_scene(file),
                          Catch::Matchers::ContainsSubstring(
                              "missing field 'opacity_logit'"));
    }

    SECTION("unknown field rejected") {
        std::ofstream(file) << R"({"background": [0,0,0], "splats": [
            {"mu": [0,0], "log_scale": [0,0], "phi": 0, "opacity_logit": 0,
             "color_logit": [0,0,0], "depth_rank": 0, "object_id": 0,
             "shininess": 3}]})";
        CHECK_THROWS_WITH(load_scene(file),
                          Catch::Matchers::ContainsSubstring(
                              "unknown field 'shininess'"));
    }

    SECTION("malformed json") {
        std::ofstream(file) << "{ not json";
        CHECK_THROWS_AS(load_scene(file), std::runtime_error);
    }

    SECTION("missing file") {
        CHECK_THROWS_AS(load_scene(tmp.path / "absent.json"),
                        std::runtime_error);
    }
}

TEST_CASE("fisher and covariance sidecars round trip") {
    TempDir tmp;
    FisherDiag fisher = FisherDiag::zero(12, 40);
    fisher.step_count = 17;
    std::mt19937_64 engine = make_engine(610);
    std::uniform_real_distribution<double> v(0.0, 5.0);
    for (Eigen::Index j = 0; j < fisher.values.size(); ++j) {
        fisher.values[j] = v(engine);
    }
    const fs::path ff = tmp.path / "state.fisher.json";
    save_fisher(fisher, ff);
    const FisherDiag fback = load_fisher(ff);
    CHECK(fback.values == fisher.values);
    CHECK(fback.step_count == 17);
    CHECK(fback.total_steps == 40);

    const CovDiag cov = laplace_cov(fisher, 1e-4);
    const fs::path cf = tmp.path / "state.cov.json";
    save_cov(cov, cf);
    const CovDiag cback = load_cov(cf);
    CHECK(cback.values == cov.values);
    CHECK(cback.lambda == cov.lambda);
}

TEST_CASE("ppm export uses half-up rounding and is re-readable") {
    TempDir tmp;
    Image img(3, 2);
    img.set(0, 0, {0.0, 1.0, 0.5});
    img.set(1, 0, {0.001, 0.999, 0.25});
    img.set(2, 0, {1.0 / 255.0, 0.5 / 255.0, 254.49 / 255.0});
    img.set(0, 1, {0.7, 0.2, 0.9});

    const fs::path file = tmp.path / "out.ppm";
    write_ppm(img, file);

    const std::string bytes = slurp(file);
    const std::string header = "P6\n3 2\n255\n";
    REQUIRE(bytes.substr(0, header.size()) == header);
    const auto* payload =
        reinterpret_cast<const unsigned char*>(bytes.data() + header.size());
    CHECK(payload[0] == 0);
    CHECK(payload[1] == 255);
    CHECK(payload[2] == 128); // 0.5 * 255 + 0.5 floors to 128
    CHECK(payload[3] == 0);
    CHECK(payload[4] == 255);
    CHECK(payload[5] == 64);
    CHECK(payload[6] == 1);
    CHECK(payload[7] == 1); // 0.5/255 rounds half-up to 1
    CHECK(payload[8] == 254);

    const Image back = read_ppm(file);
    REQUIRE(back.width == 3);
    REQUIRE(back.height == 2);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
        CHECK(std::abs(back.pixels[i] - img.pixels[i]) <= 0.5 / 255.0);
    }

    // Byte determinism.
    write_ppm(img, tmp.path / "out2.ppm");
    CHECK(slurp(tmp.path / "out2.ppm") == bytes);
}

TEST_CASE("pgm16 export records the scaling range in a sidecar") {
    TempDir tmp;
    ScalarMap map(2, 2);
    map.at(0, 0) = 0.25;
    map.at(1, 0) = 1.25;
    map.at(0, 1) = 0.75;
    map.at(1, 1) = 0.25;

    const fs::path file = tmp.path / "heat.pgm";
    write_pgm16(map, file);

    const std::string bytes = slurp(file);
    const std::string header = "P5\n2 2\n65535\n";
    REQUIRE(bytes.substr(0, header.size()) == header);
    const auto* payload =
        reinterpret_cast<const unsigned char*>(bytes.data() + header.size());
    auto sample = [&](int i) {
        return (static_cast<unsigned>(payload[2 * i]) << 8) |
               static_cast<unsigned>(payload[2 * i + 1]);
    };
    CHECK(sample(0) == 0);       // min maps to 0
    CHECK(sample(1) == 65535);   // max maps to full scale
    CHECK(sample(2) == 32768);   // middle, half-up
    CHECK(sample(3) == 0);

    const std::string sidecar = slurp(fs::path(file.string() + ".minmax.txt"));
    CHECK(sidecar == "min 0.25\nmax 1.25\n");

    // Constant maps collapse to zero samples with equal recorded bounds.
    ScalarMap flat(2, 1);
    flat.at(0, 0) = flat.at(1, 0) = 3.5;
    write_pgm16(flat, tmp.path / "flat.pgm");
    const std::string fb = slurp(tmp.path / "flat.pgm");
    const std::string fh = "P5\n2 1\n65535\n";
    for (std::size_t i = fh.size(); i < fb.size(); ++i) {
        CHECK(fb[i] == 0);
    }
    CHECK(slurp(tmp.path / "flat.pgm.minmax.txt") == "min 3.5\nmax 3.5\n");
}

TEST_CASE("views and camera files round trip") {
    TempDir tmp;
    const Preset p = make_two_object();
    std::vector<CameraPose> cameras = p.train_views;
    std::vector<std::string> names;
    for (std::size_t i = 0; i < cameras.size(); ++i) {
        const std::string name = "view_" + std::to_string(i) + ".ppm";
        names.push_back(name);
        write_ppm(render(p.scene, cameras[i]).image, tmp.path / name);
    }
    const fs::path vf = tmp.path / "views.json";
    save_views(cameras, names, vf);

    const std::vector<TrainView> views = load_views(vf);
    REQUIRE(views.size() == cameras.size());
    for (std::size_t i = 0; i < views.size(); ++i) {
        CHECK(views[i].camera.center == cameras[i].center);
        CHECK(views[i].camera.psi == cameras[i].psi);
        CHECK(views[i].camera.zoom == cameras[i].zoom);
        CHECK(views[i].image.width == cameras[i].width);
    }

    const fs::path cf = tmp.path / "heldout.json";
    save_cameras(p.heldout_views, cf);
    const std::vector<CameraPose> back = load_cameras(cf);
    REQUIRE(back.size() == p.heldout_views.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        CHECK(back[i].center == p.heldout_views[i].center);
        CHECK(back[i].zoom == p.heldout_views[i].zoom);
    }
}

TEST_CASE("candidate specs round trip in both forms") {
    TempDir tmp;

    CandidateSpec ring_spec;
    ring_spec.ring = RingSpec{Vec2(0.25, -0.75), 3.25, 12.0, 8, 48, 48};
    const fs::path rf = tmp.path / "ring.json";
    save_candidate_spec(ring_spec, rf);
    const CandidateSpec ring_back = load_candidate_spec(rf);
    REQUIRE(ring_back.ring.has_value());
    CHECK(ring_back.ring->center == ring_spec.ring->center);
    CHECK(ring_back.ring->radius == ring_spec.ring->radius);
    CHECK(ring_back.ring->count == 8);

    CandidateSpec explicit_spec;
    explicit_spec.explicit_poses = {
        {Vec2(1.0, 2.0), 0.5, 3.0, 16, 16},
        {Vec2(-1.0, 0.0), -0.25, 6.0, 24, 24},
    };
    const fs::path ef = tmp.path / "explicit.json";
    save_candidate_spec(explicit_spec, ef);
    const CandidateSpec explicit_back = load_candidate_spec(ef);
    CHECK_FALSE(explicit_back.ring.has_value());
    REQUIRE(explicit_back.explicit_poses.size() == 2);
    CHECK(explicit_back.explicit_poses[1].zoom == 6.0);
}

TEST_CASE("csv exports carry the documented headers") {
    TempDir tmp;

    std::vector<ObjectScore> scores = {{0, 2, 1.5, 10}, {1, 2, 0.25, 4}};
    write_scores_csv(scores, tmp.path / "scores.csv");
    const std::string sc = slurp(tmp.path / "scores.csv");
    CHECK(sc.substr(0, sc.find('\n')) == "view_id,object_id,score,pixel_count");
    CHECK_THAT(sc, Catch::Matchers::ContainsSubstring("2,0,1.5,10"));

    TrainTrace trace;
    trace.steps = {{1, 0, 0.5, 0.25, 0.9}, {2, 1, 0.4, 0.2, 0.85}};
    write_trace_csv(trace, tmp.path / "trace.csv");
    const std::string tc = slurp(tmp.path / "trace.csv");
    CHECK(tc.substr(0, tc.find('\n')) == "step,view_id,loss,grad_norm,alpha");

    ActiveReport report;
    report.psnr_threshold = 30.0;
    RoundRecord r;
    r.round = 1;
    r.chosen_id = 3;
    r.chosen_pose = {Vec2(5.0, 0.0), 3.14159, 12.0, 48, 48};
    r.heldout_psnr = 27.5;
    report.rounds.push_back(r);
    write_active_report_csv(report, tmp.path / "report.csv");
    const std::string rc = slurp(tmp.path / "report.csv");
    CHECK(rc.substr(0, rc.find('\n')) ==
          "round,chosen_id,center_x,center_y,psi,zoom,chosen_score,"
          "heldout_psnr,final_loss");

    write_active_summary(report, "uncertainty", tmp.path / "summary.txt");
    const std::string sm = slurp(tmp.path / "summary.txt");
    CHECK_THAT(sm, Catch::Matchers::ContainsSubstring("policy: uncertainty"));
    CHECK_THAT(sm, Catch::Matchers::ContainsSubstring(
                       "first_round_at_threshold: -1"));
}

TEST_CASE("fmt_real survives a write/parse round trip") {
    std::mt19937_64 engine = make_engine(700);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    for (int i = 0; i < 200; ++i) {
        const double x = std::ldexp(u(engine), i % 40 - 20);
        CHECK(std::stod(fmt_real(x)) == x);
    }
    CHECK(fmt_real(0.1) == "0.10000000000000001");
}
