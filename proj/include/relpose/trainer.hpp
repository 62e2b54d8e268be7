#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "relpose/dataset.hpp"
#include "relpose/losses.hpp"
#include "relpose/network.hpp"

namespace relpose::train {

enum class Pairing { Next, Random };

Pairing pairing_from_string(const std::string& s);
std::string to_string(Pairing p);

struct TrainConfig {
    loss::Combination combination = loss::Combination::Full;
    double learning_rate = 1e-5;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    double weight_decay = 1e-5;
    std::size_t batch_size = 32;
    std::size_t max_epochs = 200;
    std::size_t convergence_window = 10;
    double convergence_threshold = 1e-4;
    std::uint64_t rng_seed = 0;
    Pairing pairing = Pairing::Next;
    bool random_within_sequence_only = false;
    bool global_both_frames = true;
    double alpha = 10.0;   // MDLoss balance
    double margin = 0.001;  // siamese / triplet baselines
};

struct TrainReport {
    std::vector<double> epoch_losses;
    double final_s_x = 0.0;
    double final_s_q = 0.0;
    double wall_time_s = 0.0;
    std::uint64_t seed = 0;
    std::size_t epochs_run = 0;
    bool converged = false;
};

// Adam with decoupled weight decay over all parameters; s_x/s_q take Adam
// steps but no decay. Pairs are reshuffled each epoch from the seeded stream.
// Stops at max_epochs or when the moving-average loss improvement over
// convergence_window epochs falls below convergence_threshold.
TrainReport train(net::Model& model, const data::Scene& train_scene, const TrainConfig& cfg);

void write_train_report(const std::string& path, const TrainReport& report);

struct AblationRow {
    std::string scene;
    std::string combination;
    std::uint64_t seed = 0;
    double median_pos_m = 0.0;
    double median_ort_deg = 0.0;
};

// One train+evaluate cycle per combination per seed, trained on the scene's
// train split and scored on its test split. Runs execute concurrently; the
// merged table is sorted by (combination, seed).
std::vector<AblationRow> run_ablation(const data::Scene& scene, const net::ModelConfig& model_cfg,
                                      const TrainConfig& base,
                                      const std::vector<loss::Combination>& combinations,
                                      const std::vector<std::uint64_t>& seeds);

void write_ablation_csv(const std::string& path, const std::vector<AblationRow>& rows);

// Mean encoder-feature distance over the scene's aliased frame pairs.
double mean_aliased_feature_distance(const net::Model& model, const data::Scene& scene);

}  // namespace relpose::train
