#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

#include "oracle.hpp"
#include "relpose/dataset.hpp"
#include "relpose/errors.hpp"

using namespace relpose;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
    auto p = fs::temp_directory_path() / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

double descriptor_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(acc);
}

// Spearman rank correlation between two equally long samples
double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    auto ranks = [](const std::vector<double>& v) {
        std::vector<std::size_t> idx(v.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
        std::vector<double> r(v.size());
        for (std::size_t i = 0; i < idx.size(); ++i) r[idx[i]] = static_cast<double>(i);
        return r;
    };
    auto rx = ranks(x), ry = ranks(y);
    const double n = static_cast<double>(x.size());
    double mx = (n - 1) / 2.0;
    double num = 0.0, dx = 0.0, dy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        num += (rx[i] - mx) * (ry[i] - mx);
        dx += (rx[i] - mx) * (rx[i] - mx);
        dy += (ry[i] - mx) * (ry[i] - mx);
    }
    return num / std::sqrt(dx * dy);
}

data::SynthSceneConfig small_synth(std::uint64_t seed) {
    data::SynthSceneConfig cfg;
    cfg.num_sequences = 2;
    cfg.frames_per_sequence = 25;
    cfg.descriptor_dim = 16;
    cfg.rng_seed = seed;
    return cfg;
}

}  // namespace

TEST_CASE("synthetic scene shape, split and determinism") {
    auto cfg = small_synth(3);
    auto scene = data::generate_synth_scene(cfg);
    CHECK(scene.frames.size() == 50);
    CHECK(scene.sequences().size() == 2);
    for (const auto& f : scene.frames) CHECK(f.descriptor.size() == 16);

    // test_fraction 0.2 -> every 5th frame of each sequence is test
    std::size_t n_test = 0;
    for (const auto& f : scene.frames) n_test += f.is_test;
    CHECK(n_test == 10);

    auto again = data::generate_synth_scene(cfg);
    for (std::size_t i = 0; i < scene.frames.size(); ++i) {
        CHECK(scene.frames[i].descriptor == again.frames[i].descriptor);
        CHECK(scene.frames[i].pose == again.frames[i].pose);
    }
    auto other = data::generate_synth_scene(small_synth(4));
    CHECK(scene.frames[0].descriptor != other.frames[0].descriptor);

    for (const auto& f : scene.frames) {
        CHECK(is_unit(f.pose.orientation));
        CHECK(f.pose.orientation.w >= 0.0);
        CHECK(f.pose.position.px >= 0.0);
        CHECK(f.pose.position.px <= cfg.workspace_extent);
    }
}

TEST_CASE("synthetic descriptors are a smooth function of the pose") {
    auto cfg = small_synth(9);
    cfg.descriptor_noise_sigma = 0.005;
    auto scene = data::generate_synth_scene(cfg);
    std::mt19937_64 gen(1);
    std::uniform_int_distribution<std::size_t> pick(0, scene.frames.size() - 1);
    std::vector<double> pose_d, desc_d;
    for (int k = 0; k < 400; ++k) {
        auto i = pick(gen), j = pick(gen);
        if (i == j) continue;
        const auto& a = scene.frames[i];
        const auto& b = scene.frames[j];
        pose_d.push_back(position_error_m(a.pose.position, b.pose.position) +
                         angular_error_deg(a.pose.orientation, b.pose.orientation) / 60.0);
        desc_d.push_back(descriptor_distance(a.descriptor, b.descriptor));
    }
    CHECK(spearman(pose_d, desc_d) > 0.5);
}

TEST_CASE("aliased pairs are distant in pose and near-duplicate in descriptor") {
    auto cfg = small_synth(5);
    cfg.num_sequences = 3;
    cfg.frames_per_sequence = 40;
    cfg.aliasing_fraction = 0.2;
    cfg.aliasing_pair_min_distance = 1.0;
    auto scene = data::generate_synth_scene(cfg);
    CHECK(scene.aliased_pairs.size() == 24);  // 0.2 * 120
    for (auto [a, b] : scene.aliased_pairs) {
        CHECK(position_error_m(scene.frames[a].pose.position, scene.frames[b].pose.position) >=
              1.0);
        CHECK(descriptor_distance(scene.frames[a].descriptor, scene.frames[b].descriptor) <
              4.0 * cfg.descriptor_noise_sigma);
        CHECK(scene.frames[a].is_test == scene.frames[b].is_test);
    }
}

TEST_CASE("infeasible aliasing constraints throw") {
    auto cfg = small_synth(5);
    cfg.aliasing_fraction = 0.5;
    cfg.aliasing_pair_min_distance = 100.0;  // larger than the workspace
    CHECK_THROWS_AS(data::generate_synth_scene(cfg), InfeasibleAliasing);
}

TEST_CASE("train/test split partitions frames and remaps aliased pairs") {
    auto cfg = small_synth(7);
    cfg.aliasing_fraction = 0.1;
    auto scene = data::generate_synth_scene(cfg);
    auto tr = data::train_split(scene);
    auto te = data::test_split(scene);
    CHECK(tr.frames.size() + te.frames.size() == scene.frames.size());
    CHECK(tr.split == "train");
    CHECK(te.split == "test");
    for (const auto& f : tr.frames) CHECK_FALSE(f.is_test);
    for (const auto& f : te.frames) CHECK(f.is_test);
    // every remapped aliased pair indexes valid frames of the same split
    CHECK(tr.aliased_pairs.size() + te.aliased_pairs.size() == scene.aliased_pairs.size());
    for (auto [a, b] : tr.aliased_pairs) {
        CHECK(a < tr.frames.size());
        CHECK(b < tr.frames.size());
    }
}

TEST_CASE("pair_next structure") {
    auto scene = data::generate_synth_scene(small_synth(2));
    auto pairs = data::pair_next(scene);
    CHECK(pairs.size() == scene.frames.size());  // one pair per frame
    auto seqs = scene.sequences();
    for (const auto& seq : seqs) {
        for (std::size_t k = 0; k + 1 < seq.size(); ++k) {
            CHECK(pairs[seq[k]].current == seq[k]);
            CHECK(pairs[seq[k]].reference == seq[k + 1]);
        }
        // last frame pairs backward with its predecessor
        CHECK(pairs[seq.back()].reference == seq[seq.size() - 2]);
    }
    // gt_rel matches the pose algebra
    for (const auto& p : pairs) {
        auto expect = relative_pose(scene.frames[p.current].pose, scene.frames[p.reference].pose);
        CHECK(p.gt_rel == expect);
    }
}

TEST_CASE("pair_next rejects one-frame sequences") {
    data::Scene scene;
    scene.frames.push_back({"only", "s0", {0.0}, Pose{}, false});
    CHECK_THROWS_AS(data::pair_next(scene), SequenceTooShort);
}

TEST_CASE("pair_random is a seeded derangement") {
    auto scene = data::generate_synth_scene(small_synth(6));
    auto pairs = data::pair_random(scene, 42);
    CHECK(pairs.size() == scene.frames.size());
    std::set<std::size_t> refs;
    for (const auto& p : pairs) {
        CHECK(p.current != p.reference);  // fixed-point free
        refs.insert(p.reference);
    }
    CHECK(refs.size() == scene.frames.size());  // a permutation

    auto again = data::pair_random(scene, 42);
    for (std::size_t i = 0; i < pairs.size(); ++i)
        CHECK(pairs[i].reference == again[i].reference);
    auto different = data::pair_random(scene, 43);
    bool any_diff = false;
    for (std::size_t i = 0; i < pairs.size(); ++i)
        any_diff = any_diff || pairs[i].reference != different[i].reference;
    CHECK(any_diff);

    // within-sequence option never crosses sequences
    auto within = data::pair_random(scene, 7, true);
    for (const auto& p : within)
        CHECK(scene.frames[p.current].sequence_id == scene.frames[p.reference].sequence_id);
}

TEST_CASE("next pairs have much closer descriptors than random pairs") {
    auto scene = data::generate_synth_scene(small_synth(8));
    auto s_next = data::pair_similarity_stats(scene, data::pair_next(scene));
    auto s_rand = data::pair_similarity_stats(scene, data::pair_random(scene, 1));
    CHECK(s_next.mean_descriptor_distance < s_rand.mean_descriptor_distance);
}

TEST_CASE("pair_similarity_stats hand value") {
    data::Scene scene;
    scene.frames.push_back({"a", "s", {0.0, 0.0}, Pose{}, false});
    scene.frames.push_back({"b", "s", {3.0, 4.0}, Pose{}, false});
    auto pairs = data::pair_next(scene);
    auto stats = data::pair_similarity_stats(scene, pairs);
    CHECK(stats.mean_descriptor_distance == doctest::Approx(5.0));  // both pairs distance 5
}

TEST_CASE("rotation matrix conversions against the oracle") {
    std::mt19937_64 gen(12);
    for (int i = 0; i < 500; ++i) {
        auto q = canonicalize_hemisphere(oracle::random_unit_quat(gen));
        auto r = data::quat_to_rotmat(q);
        // matches the independent oracle matrix
        CHECK(oracle::max_abs_diff(r, oracle::quat_to_mat(q)) < 1e-12);
        auto back = data::rotmat_to_quat(r);
        CHECK(back.w == doctest::Approx(q.w).epsilon(1e-9));
        CHECK(back.x == doctest::Approx(q.x).epsilon(1e-9));
        CHECK(back.y == doctest::Approx(q.y).epsilon(1e-9));
        CHECK(back.z == doctest::Approx(q.z).epsilon(1e-9));
    }
}

TEST_CASE("7scenes pose files round-trip") {
    auto dir = temp_dir("relpose_7scenes_rt");
    auto scene = data::generate_synth_scene(small_synth(11));
    data::write_7scenes_poses(dir.string(), scene);
    auto loaded = data::load_7scenes_poses(dir.string());
    REQUIRE(loaded.frames.size() == scene.frames.size());
    for (std::size_t i = 0; i < scene.frames.size(); ++i) {
        const auto& a = scene.frames[i].pose;
        const auto& b = loaded.frames[i].pose;
        CHECK(position_error_m(a.position, b.position) < 1e-12);
        CHECK(angular_error_deg(a.orientation, b.orientation) < 1e-5);
    }
    CHECK(loaded.frames[0].id == "frame-000000");
    fs::remove_all(dir);
}

TEST_CASE("7scenes loader accepts small orthogonality drift and repairs it") {
    auto dir = temp_dir("relpose_7scenes_drift");
    {
        std::ofstream out(dir / "frame-000000.pose.txt");
        // identity rotation with a 1e-4 shear: within the 1e-3 gate
        out << "1 0.0001 0 0.5\n0 1 0 0.25\n0 0 1 -0.75\n0 0 0 1\n";
    }
    auto scene = data::load_7scenes_poses(dir.string());
    REQUIRE(scene.frames.size() == 1);
    const auto& q = scene.frames[0].pose.orientation;
    auto r = data::quat_to_rotmat(q);
    // the stored quaternion corresponds to an exactly orthogonal matrix
    double err = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double dot = 0.0;
            for (int k = 0; k < 3; ++k) dot += r[k * 3 + i] * r[k * 3 + j];
            err = std::max(err, std::abs(dot - (i == j ? 1.0 : 0.0)));
        }
    CHECK(err < 1e-9);
    CHECK(scene.frames[0].pose.position.px == doctest::Approx(0.5));
    fs::remove_all(dir);
}

TEST_CASE("7scenes loader rejects malformed files") {
    SUBCASE("too few values") {
        auto dir = temp_dir("relpose_7scenes_short");
        std::ofstream(dir / "frame-000000.pose.txt") << "1 0 0\n";
        CHECK_THROWS_AS(data::load_7scenes_poses(dir.string()), MalformedPoseFile);
        fs::remove_all(dir);
    }
    SUBCASE("too many values") {
        auto dir = temp_dir("relpose_7scenes_long");
        std::ofstream(dir / "frame-000000.pose.txt")
            << "1 0 0 0\n0 1 0 0\n0 0 1 0\n0 0 0 1\n99\n";
        CHECK_THROWS_AS(data::load_7scenes_poses(dir.string()), MalformedPoseFile);
        fs::remove_all(dir);
    }
    SUBCASE("rotation block far from orthogonal") {
        auto dir = temp_dir("relpose_7scenes_nonortho");
        std::ofstream(dir / "frame-000000.pose.txt")
            << "1 0.5 0 0\n0 1 0 0\n0 0 1 0\n0 0 0 1\n";
        CHECK_THROWS_AS(data::load_7scenes_poses(dir.string()), NonOrthogonalRotation);
        fs::remove_all(dir);
    }
    SUBCASE("reflection (negative determinant)") {
        auto dir = temp_dir("relpose_7scenes_reflect");
        std::ofstream(dir / "frame-000000.pose.txt")
            << "-1 0 0 0\n0 1 0 0\n0 0 1 0\n0 0 0 1\n";
        CHECK_THROWS_AS(data::load_7scenes_poses(dir.string()), NonOrthogonalRotation);
        fs::remove_all(dir);
    }
}

TEST_CASE("cambridge dataset file round-trip and header handling") {
    auto dir = temp_dir("relpose_cambridge");
    auto scene = data::generate_synth_scene(small_synth(13));
    // cambridge ids look like paths
    for (std::size_t i = 0; i < scene.frames.size(); ++i)
        scene.frames[i].id = scene.frames[i].sequence_id + "/frame" + std::to_string(i) + ".png";
    const auto file = (dir / "dataset_train.txt").string();
    data::write_cambridge_poses(file, scene);
    auto loaded = data::load_cambridge_poses(file);
    REQUIRE(loaded.frames.size() == scene.frames.size());
    for (std::size_t i = 0; i < scene.frames.size(); ++i) {
        CHECK(loaded.frames[i].id == scene.frames[i].id);
        CHECK(loaded.frames[i].sequence_id == scene.frames[i].sequence_id);
        CHECK(position_error_m(loaded.frames[i].pose.position, scene.frames[i].pose.position) <
              1e-12);
        // acos amplifies last-bit rounding of the dot product, hence 1e-5 deg
        CHECK(angular_error_deg(loaded.frames[i].pose.orientation,
                                scene.frames[i].pose.orientation) < 1e-5);
    }
    fs::remove_all(dir);
}

TEST_CASE("cambridge loader rejects malformed data lines") {
    auto dir = temp_dir("relpose_cambridge_bad");
    SUBCASE("too few fields") {
        const auto file = (dir / "bad1.txt").string();
        std::ofstream(file) << "header line\nseq1/f0.png 1.0 2.0 3.0 1.0 0.0\n";
        CHECK_THROWS_AS(data::load_cambridge_poses(file), MalformedLine);
    }
    SUBCASE("too many fields") {
        const auto file = (dir / "bad2.txt").string();
        std::ofstream(file) << "seq1/f0.png 1 2 3 1 0 0 0 99\n";
        CHECK_THROWS_AS(data::load_cambridge_poses(file), MalformedLine);
    }
    SUBCASE("non-numeric field") {
        const auto file = (dir / "bad3.txt").string();
        std::ofstream(file) << "seq1/f0.png 1 2 three 1 0 0 0\n";
        CHECK_THROWS_AS(data::load_cambridge_poses(file), MalformedLine);
    }
    fs::remove_all(dir);
}

TEST_CASE("jsonl scene exchange round-trips exactly") {
    auto dir = temp_dir("relpose_jsonl");
    auto cfg = small_synth(17);
    cfg.aliasing_fraction = 0.0;
    auto scene = data::generate_synth_scene(cfg);
    const auto file = (dir / "scene.jsonl").string();
    data::write_scene_jsonl(file, scene);
    auto loaded = data::load_scene_jsonl(file);
    REQUIRE(loaded.frames.size() == scene.frames.size());
    for (std::size_t i = 0; i < scene.frames.size(); ++i) {
        CHECK(loaded.frames[i].id == scene.frames[i].id);
        CHECK(loaded.frames[i].sequence_id == scene.frames[i].sequence_id);
        CHECK(loaded.frames[i].is_test == scene.frames[i].is_test);
        CHECK(loaded.frames[i].descriptor == scene.frames[i].descriptor);  // bit exact
        CHECK(loaded.frames[i].pose.position == scene.frames[i].pose.position);  // bit exact
        // the loader re-normalizes, which may flip the last bit
        CHECK(loaded.frames[i].pose.orientation.w ==
              doctest::Approx(scene.frames[i].pose.orientation.w).epsilon(1e-14));
        CHECK(loaded.frames[i].pose.orientation.x ==
              doctest::Approx(scene.frames[i].pose.orientation.x).epsilon(1e-14));
        CHECK(loaded.frames[i].pose.orientation.y ==
              doctest::Approx(scene.frames[i].pose.orientation.y).epsilon(1e-14));
        CHECK(loaded.frames[i].pose.orientation.z ==
              doctest::Approx(scene.frames[i].pose.orientation.z).epsilon(1e-14));
    }
    std::ofstream(file, std::ios::app) << "{not json}\n";
    CHECK_THROWS_AS(data::load_scene_jsonl(file), MalformedLine);
    fs::remove_all(dir);
}

TEST_CASE("descriptor sidecar attaches vectors in frame order") {
    auto dir = temp_dir("relpose_sidecar");
    data::Scene scene;
    scene.frames.push_back({"a", "s", {}, Pose{}, false});
    scene.frames.push_back({"b", "s", {}, Pose{}, false});
    data::write_7scenes_poses(dir.string(), scene);
    const auto sidecar = (dir / "desc.txt").string();
    std::ofstream(sidecar) << "1 2 3\n4 5 6\n";
    auto loaded = data::load_7scenes_poses(dir.string(), sidecar);
    CHECK(loaded.frames[0].descriptor == std::vector<double>{1, 2, 3});
    CHECK(loaded.frames[1].descriptor == std::vector<double>{4, 5, 6});
    std::ofstream(sidecar) << "1 2 3\n";  // count mismatch
    CHECK_THROWS_AS(data::load_7scenes_poses(dir.string(), sidecar), Error);
    fs::remove_all(dir);
}
