#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "segue/core.hpp"
#include "segue/semantics.hpp"
#include "segue/sim.hpp"

using namespace segue;

namespace {

// Ring-walled, otherwise empty world.
Environment empty_world(int w, int h, double res, int classes = 16) {
    Environment env(w, h, res, classes,
                    make_pose(w * res / 2.0 + res / 2.0, h * res / 2.0 + res / 2.0, 0.0));
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            const bool border = r == 0 || r == h - 1 || c == 0 || c == w - 1;
            env.set_obstacle({r, c}, border);
            env.set_class({r, c}, 1);
        }
    env.finalize();
    return env;
}

}  // namespace

TEST_CASE("prototype synthesis") {
    SECTION("two dimensions, two classes: an orthonormal pair") {
        const PrototypeBank bank = synthesize_prototypes(2, 2, 1);
        REQUIRE(bank.prototypes.size() == 2);
        double n0 = 0, n1 = 0, dot = 0;
        for (int j = 0; j < 2; ++j) {
            n0 += bank.prototypes[0][j] * bank.prototypes[0][j];
            n1 += bank.prototypes[1][j] * bank.prototypes[1][j];
            dot += bank.prototypes[0][j] * bank.prototypes[1][j];
        }
        CHECK(n0 == Catch::Approx(1.0).margin(1e-12));
        CHECK(n1 == Catch::Approx(1.0).margin(1e-12));
        CHECK(dot == Catch::Approx(0.0).margin(1e-12));
    }

    SECTION("same seed yields the identical bank") {
        const PrototypeBank a = synthesize_prototypes(8, 32, 99);
        const PrototypeBank b = synthesize_prototypes(8, 32, 99);
        REQUIRE(a.prototypes == b.prototypes);
        const PrototypeBank c = synthesize_prototypes(8, 32, 100);
        CHECK(a.prototypes != c.prototypes);
    }

    SECTION("gram matrix is the identity within 1e-9") {
        const PrototypeBank bank = synthesize_prototypes(8, 32, 7);
        for (int i = 0; i < 8; ++i)
            for (int k = 0; k < 8; ++k) {
                double dot = 0.0;
                for (int j = 0; j < 32; ++j) dot += bank.prototypes[i][j] * bank.prototypes[k][j];
                CHECK(dot == Catch::Approx(i == k ? 1.0 : 0.0).margin(1e-9));
            }
    }

    SECTION("dimension preconditions") {
        CHECK_THROWS_AS(synthesize_prototypes(1, 8, 0), InvalidDims);
        CHECK_THROWS_AS(synthesize_prototypes(8, 4, 0), InvalidDims);
    }
}

TEST_CASE("ground-truth classifier") {
    const PrototypeBank bank = synthesize_prototypes(8, 32, 5);

    SECTION("clean prototypes classify sharply at low temperature") {
        const ClassifierHead head = ground_truth_classifier(bank, 0.1);
        for (int k = 0; k < 8; ++k) {
            const std::vector<double> p = classify(head, bank.prototypes[k]);
            CHECK(p[static_cast<std::size_t>(k)] > 0.99);
        }
    }

    SECTION("rising temperature flattens the prediction") {
        double previous = -1.0;
        for (double temperature : {0.1, 1.0, 10.0}) {
            const ClassifierHead head = ground_truth_classifier(bank, temperature);
            const double h = shannon_entropy(classify(head, bank.prototypes[3]));
            CHECK(h > previous);
            previous = h;
        }
    }

    SECTION("the zero feature is uniformly uncertain") {
        const ClassifierHead head = ground_truth_classifier(bank, 0.5);
        const std::vector<double> p = classify(head, FeatureVector(32, 0.0));
        for (double v : p) CHECK(v == Catch::Approx(1.0 / 8.0).margin(1e-12));
    }
}

TEST_CASE("lidar scanning") {
    SensorSpec spec;
    spec.lidar_beams = 360;

    SECTION("empty room larger than the range: all beams miss") {
        const Environment env = empty_world(60, 60, 1.0);
        spec.camera_range = 4.0;
        spec.lidar_range = 10.0;
        const RangeScan scan = sense_lidar(env, make_pose(30.5, 30.5, 0.0), spec);
        REQUIRE(scan.beams.size() == 360);
        for (const RangeScan::Beam& beam : scan.beams) {
            CHECK_FALSE(beam.hit);
            CHECK(beam.distance == 10.0);
        }
    }

    SECTION("wall due east is ranged within half a cell") {
        // 0.25 m cells; wall column 12 puts the inner face exactly 3 m east
        // of a pose centered in column 0's neighbor.
        Environment env(40, 40, 0.25, 16, make_pose(0.625, 5.125, 0.0));
        for (int r = 0; r < 40; ++r)
            for (int c = 0; c < 40; ++c) {
                const bool border = r == 0 || r == 39 || c == 0 || c == 39;
                env.set_obstacle({r, c}, border || c == 14);
                env.set_class({r, c}, 1);
            }
        env.finalize();
        spec.camera_range = 2.0;
        spec.lidar_range = 12.0;
        const Pose pose = make_pose(0.625, 5.125, 0.0);  // cell (20, 2) center
        const RangeScan scan = sense_lidar(env, pose, spec);
        const RangeScan::Beam& east = scan.beams[0];  // bearing 0
        REQUIRE(east.hit);
        const double analytic = 14 * 0.25 - 0.625;  // ray-box entry distance
        CHECK(std::abs(east.distance - analytic) <= 0.125 + 1e-12);
    }

    SECTION("contact with an adjacent wall") {
        const Environment env = empty_world(10, 10, 1.0);
        spec.camera_range = 2.0;
        spec.lidar_range = 20.0;
        const Pose pose = make_pose(1.5, 5.5, 0.0);  // wall ring one cell west
        const RangeScan scan = sense_lidar(env, pose, spec);
        const RangeScan::Beam& west = scan.beams[180];
        REQUIRE(west.hit);
        CHECK(west.distance <= 1.0);
    }

    SECTION("poses inside obstacles or off-world are invalid") {
        const Environment env = empty_world(10, 10, 1.0);
        CHECK_THROWS_AS(sense_lidar(env, make_pose(0.5, 0.5, 0.0), spec), InvalidPose);
        CHECK_THROWS_AS(sense_lidar(env, make_pose(-3.0, 4.0, 0.0), spec), InvalidPose);
    }
}

TEST_CASE("semantic camera") {
    SECTION("noiseless contact returns exact prototypes") {
        const Environment env = empty_world(12, 12, 1.0, 4);
        const PrototypeBank bank = synthesize_prototypes(4, 8, 3);
        SensorSpec spec;
        spec.camera_fov = kTwoPi;
        spec.camera_range = 20.0;
        spec.lidar_range = 25.0;
        spec.noise_sigma0 = 0.0;
        spec.noise_kappa = 0.0;
        Rng rng(1);
        const auto frame = sense_camera(env, make_pose(6.5, 6.5, 0.0), spec, bank, rng);
        REQUIRE_FALSE(frame.empty());
        for (const CameraObservation& obs : frame) {
            const int k = env.class_at(obs.cell);
            REQUIRE(obs.feature == bank.prototypes[static_cast<std::size_t>(k)]);
        }
    }

    SECTION("half ambiguity lands near a two-way tie") {
        Environment env = empty_world(12, 12, 1.0, 16);
        env.set_ambiguity({6, 8}, 0.5);
        env.finalize();
        const PrototypeBank bank = synthesize_prototypes(16, 64, 4);
        const ClassifierHead head = ground_truth_classifier(bank, 0.05);
        SensorSpec spec;
        spec.camera_fov = kTwoPi;
        spec.camera_range = 8.0;
        spec.lidar_range = 12.0;
        spec.noise_sigma0 = 0.0;
        spec.noise_kappa = 0.0;
        Rng rng(1);
        const auto frame = sense_camera(env, make_pose(6.5, 6.5, 0.0), spec, bank, rng);

        // Direct evaluation on the hand-mixed vector.
        FeatureVector mixed(64);
        double norm = 0.0;
        for (int j = 0; j < 64; ++j) {
            mixed[j] = 0.5 * bank.prototypes[1][j] + 0.5 * bank.prototypes[2][j];
            norm += mixed[j] * mixed[j];
        }
        norm = std::sqrt(norm);
        for (double& v : mixed) v /= norm;
        const double expected = feature_score(mixed, head);

        bool found = false;
        for (const CameraObservation& obs : frame) {
            if (obs.cell == GridIndex{6, 8}) {
                found = true;
                const double s = feature_score(obs.feature, head);
                CHECK(s == Catch::Approx(expected).margin(1e-9));
                CHECK(s == Catch::Approx(std::log(2.0) / std::log(16.0)).margin(0.05));
            }
        }
        REQUIRE(found);
    }

    SECTION("cells behind a true wall are absent") {
        Environment env = empty_world(15, 15, 1.0);
        for (int r = 5; r <= 9; ++r) env.set_obstacle({r, 9}, true);
        env.finalize();
        SensorSpec spec;
        spec.camera_fov = kTwoPi;
        spec.camera_range = 20.0;
        spec.lidar_range = 25.0;
        const PrototypeBank bank = synthesize_prototypes(16, 64, 5);
        Rng rng(2);
        const auto frame = sense_camera(env, make_pose(7.5, 7.5, 0.0), spec, bank, rng);
        for (const CameraObservation& obs : frame) CHECK(obs.cell != GridIndex{7, 11});
        bool wall_seen = false;
        for (const CameraObservation& obs : frame)
            if (obs.cell == GridIndex{7, 9}) wall_seen = true;
        CHECK(wall_seen);  // the wall itself carries appearance
    }

    SECTION("emissions are a subset of the truth-grid view mask") {
        Rng seeder(31);
        Environment env = empty_world(20, 20, 0.5);
        for (int i = 0; i < 25; ++i)
            env.set_obstacle({1 + static_cast<int>(seeder.uniform_index(18)),
                              1 + static_cast<int>(seeder.uniform_index(18))},
                             true);
        env.finalize();
        const PrototypeBank bank = synthesize_prototypes(16, 64, 6);
        SensorSpec spec;  // default pi/2 fov, 4 m range
        for (int trial = 0; trial < 10; ++trial) {
            const GridIndex cell{1 + static_cast<int>(seeder.uniform_index(18)),
                                 1 + static_cast<int>(seeder.uniform_index(18))};
            if (env.obstacle_at(cell)) continue;
            double x, y;
            env.truth_grid().grid_to_world(cell, x, y);
            const Pose pose = make_pose(x, y, seeder.uniform(-kPi, kPi));
            Rng rng(seeder.raw());
            const auto frame = sense_camera(env, pose, spec, bank, rng);
            const ViewMask mask =
                visibility_mask(env.truth_grid(), pose, spec.camera_fov, spec.camera_range);
            for (const CameraObservation& obs : frame) REQUIRE(mask.contains(obs.cell));
        }
    }

    SECTION("identical seeds produce bit-identical observation streams") {
        const Environment env = empty_world(14, 14, 0.5);
        const PrototypeBank bank = synthesize_prototypes(16, 64, 7);
        SensorSpec spec;
        Rng rng_a(123), rng_b(123);
        const Pose pose = make_pose(3.25, 3.25, 0.9);
        const auto frame_a = sense_camera(env, pose, spec, bank, rng_a);
        const auto frame_b = sense_camera(env, pose, spec, bank, rng_b);
        REQUIRE(frame_a.size() == frame_b.size());
        for (std::size_t i = 0; i < frame_a.size(); ++i) {
            REQUIRE(frame_a[i].cell == frame_b[i].cell);
            REQUIRE(frame_a[i].feature == frame_b[i].feature);
        }

        const RangeScan scan_a = sense_lidar(env, pose, spec);
        const RangeScan scan_b = sense_lidar(env, pose, spec);
        REQUIRE(scan_a.beams.size() == scan_b.beams.size());
        for (std::size_t i = 0; i < scan_a.beams.size(); ++i) {
            REQUIRE(scan_a.beams[i].distance == scan_b.beams[i].distance);
            REQUIRE(scan_a.beams[i].hit == scan_b.beams[i].hit);
        }
    }
}

TEST_CASE("fusion drives scores down for unambiguous cells") {
    const PrototypeBank bank = synthesize_prototypes(16, 64, 21);
    const ClassifierHead head = ground_truth_classifier(bank, 0.25);
    const double sigma = 0.05 + 0.3 * 1.0;  // observation noise at 1 m

    double mean_single = 0.0;
    double mean_fused = 0.0;
    const int seeds = 50;
    for (int seed = 1; seed <= seeds; ++seed) {
        Rng rng(static_cast<std::uint64_t>(seed));
        SemanticMap single(1, 1, 64), fused(1, 1, 64);
        for (int obs = 0; obs < 10; ++obs) {
            FeatureVector x = bank.prototypes[5];
            for (double& v : x) v += sigma * rng.normal();
            if (obs == 0) fuse_observation(single, {0, 0}, x, head, 1.1);
            fuse_observation(fused, {0, 0}, x, head, 1.1);
        }
        mean_single += single.at({0, 0}).score;
        mean_fused += fused.at({0, 0}).score;
    }
    mean_single /= seeds;
    mean_fused /= seeds;
    CHECK(mean_fused < mean_single - 0.05);
}

TEST_CASE("ambiguous cells keep an aleatoric score floor") {
    const PrototypeBank bank = synthesize_prototypes(16, 64, 22);
    const ClassifierHead head = ground_truth_classifier(bank, 0.25);
    const double sigma = 0.05 + 0.3 * 1.0;  // close observations

    for (double ambiguity : {0.5, 0.6, 0.75}) {
        int retained = 0;
        for (int seed = 1; seed <= 50; ++seed) {
            Rng rng(static_cast<std::uint64_t>(seed) * 31 + 7);
            FeatureVector mixed(64);
            double norm = 0.0;
            for (int j = 0; j < 64; ++j) {
                mixed[j] = (1.0 - ambiguity) * bank.prototypes[3][j] +
                           ambiguity * bank.prototypes[4][j];
                norm += mixed[j] * mixed[j];
            }
            norm = std::sqrt(norm);
            for (double& v : mixed) v /= norm;

            SemanticMap map(1, 1, 64);
            for (int obs = 0; obs < 20; ++obs) {
                FeatureVector x = mixed;
                for (double& v : x) v += sigma * rng.normal();
                fuse_observation(map, {0, 0}, x, head, 1.1);
            }
            if (map.at({0, 0}).score >= 0.3) ++retained;
        }
        CHECK(retained >= 45);
    }
}

TEST_CASE("environment invariants") {
    SECTION("boundary ring must be obstacle") {
        Environment env(6, 6, 1.0, 4, make_pose(2.5, 2.5, 0.0));
        for (int r = 0; r < 6; ++r)
            for (int c = 0; c < 6; ++c)
                env.set_obstacle({r, c}, r == 0 || c == 0 || r == 5);  // east side open
        CHECK_THROWS_AS(env.finalize(), InvalidDims);
    }

    SECTION("start pose must be free") {
        Environment env(6, 6, 1.0, 4, make_pose(2.5, 2.5, 0.0));
        for (int r = 0; r < 6; ++r)
            for (int c = 0; c < 6; ++c) {
                const bool border = r == 0 || c == 0 || r == 5 || c == 5;
                env.set_obstacle({r, c}, border || (r == 2 && c == 2));
            }
        CHECK_THROWS_AS(env.finalize(), InvalidPose);
    }

    SECTION("class and ambiguity ranges are checked") {
        Environment env(6, 6, 1.0, 4, make_pose(2.5, 2.5, 0.0));
        CHECK_THROWS_AS(env.set_class({1, 1}, 4), InvalidDims);
        CHECK_THROWS_AS(env.set_ambiguity({1, 1}, 1.5), InvalidDims);
    }
}
