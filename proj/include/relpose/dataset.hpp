#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "relpose/pose.hpp"

namespace relpose::data {

struct Frame {
    std::string id;
    std::string sequence_id;
    std::vector<double> descriptor;
    Pose pose;  // orientation unit and canonicalized at load time
    bool is_test = false;
};

struct Scene {
    std::string name;
    std::string split = "all";  // train | test | all
    std::vector<Frame> frames;  // grouped by sequence, capture order preserved
    // indices of frames constructed as distant near-duplicate-descriptor pairs
    std::vector<std::pair<std::size_t, std::size_t>> aliased_pairs;

    // frame indices per sequence, in capture order
    std::vector<std::vector<std::size_t>> sequences() const;
    std::size_t index_of(const std::string& frame_id) const;
};

// Subset views by the is_test flag; aliased pairs are remapped and kept only
// when both endpoints survive.
Scene train_split(const Scene& s);
Scene test_split(const Scene& s);

struct TrainingPairSpec {
    std::size_t current = 0;    // frame indices into Scene::frames
    std::size_t reference = 0;
    std::string current_frame_id;
    std::string reference_frame_id;
    RelativePose gt_rel;  // relative_pose(current.pose, reference.pose)
};

// frame i paired with i+1 within its sequence; the last frame pairs backward
// with its predecessor. Exactly one pair per frame.
std::vector<TrainingPairSpec> pair_next(const Scene& scene);

// Reference assignment is a fixed-point-free permutation (derangement) of the
// frames, found by rejection sampling; deterministic given the seed. With
// within_sequence_only, the derangement is drawn per sequence.
std::vector<TrainingPairSpec> pair_random(const Scene& scene, std::uint64_t rng_seed,
                                          bool within_sequence_only = false);

struct SynthSceneConfig {
    std::size_t num_sequences = 3;
    std::size_t frames_per_sequence = 50;
    double workspace_extent = 4.0;  // meters
    std::size_t descriptor_dim = 32;
    double descriptor_noise_sigma = 0.01;
    double aliasing_fraction = 0.0;       // in [0, 1)
    double aliasing_pair_min_distance = 1.0;  // meters
    double test_fraction = 0.2;
    std::uint64_t rng_seed = 0;
};

// Smooth per-sequence trajectories; descriptors are a smooth deterministic
// function of the pose plus Gaussian noise. An aliasing_fraction of frames
// gets a distant partner (>= aliasing_pair_min_distance apart, same split)
// whose descriptor is overwritten with a near-duplicate. Bit-identical for a
// given config.
Scene generate_synth_scene(const SynthSceneConfig& cfg);

// 7Scenes format: frame-%06d.pose.txt, 4 lines x 4 reals, row-major
// homogeneous matrix. Descriptors come from an optional sidecar file with one
// whitespace-separated vector per frame, in frame order.
Scene load_7scenes_poses(const std::string& directory,
                         const std::string& descriptor_sidecar = "");
void write_7scenes_poses(const std::string& directory, const Scene& scene);

// Cambridge format: header lines, then "path x y z w p q r" per line.
Scene load_cambridge_poses(const std::string& file,
                           const std::string& descriptor_sidecar = "");
void write_cambridge_poses(const std::string& file, const Scene& scene);

// JSON-lines scene exchange: one record per frame
// {id, sequence, position[3], quaternion[4], descriptor[...], test}.
void write_scene_jsonl(const std::string& file, const Scene& scene);
Scene load_scene_jsonl(const std::string& file);

struct PairSimilarityStats {
    double mean_descriptor_distance = 0.0;
    std::vector<double> per_pair_distances;
};

PairSimilarityStats pair_similarity_stats(const Scene& scene,
                                          const std::vector<TrainingPairSpec>& pairs);

// rotation-matrix helpers used by the pose-file loaders (row-major 3x3)
Quaternion rotmat_to_quat(const std::array<double, 9>& r);
std::array<double, 9> quat_to_rotmat(const Quaternion& q);

}  // namespace relpose::data
