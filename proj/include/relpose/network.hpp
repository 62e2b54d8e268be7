#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "relpose/pose.hpp"
#include "relpose/tensor.hpp"

namespace relpose::net {

struct EncoderConfig {
    std::size_t input_dim = 32;
    std::vector<std::size_t> hidden_dims{128, 128};
    std::size_t feature_dim = 64;  // D
    double dropout_rate = 0.2;
};

struct ModelConfig {
    EncoderConfig encoder;
    std::size_t head_hidden = 128;  // full-scale runs use 1024
    bool with_rpru = true;
};

struct Dense {
    diff::Tensor weight;  // (out x in)
    diff::Tensor bias;    // (out)
};

// Siamese pose regressor. The twin branches are this single parameter set;
// the pairing happens at the call sites, not in the parameters.
class Model {
  public:
    Model() = default;
    explicit Model(const ModelConfig& cfg, std::uint64_t init_seed);

    const ModelConfig& config() const { return cfg_; }
    bool has_rpru() const { return rpru_fc1_.has_value(); }

    // Feature f for one descriptor. In train mode, inverted-dropout masks are
    // drawn from *rng; eval mode is deterministic and ignores rng.
    diff::Tensor encode(const std::vector<double>& descriptor, bool train = false,
                        std::mt19937_64* rng = nullptr) const;

    // Raw (unnormalized) global pose heads.
    std::pair<diff::Tensor, diff::Tensor> gpru(const diff::Tensor& f, bool train = false,
                                               std::mt19937_64* rng = nullptr) const;

    // Raw relative pose from concat(f, f_ref). Throws MissingHead without RPRU.
    std::pair<diff::Tensor, diff::Tensor> rpru(const diff::Tensor& f, const diff::Tensor& f_ref,
                                               bool train = false,
                                               std::mt19937_64* rng = nullptr) const;

    // Testing-phase path: encoder + GPRU only, quaternion normalized and
    // hemisphere-canonicalized.
    Pose predict_pose(const std::vector<double>& descriptor) const;

    // Learnable loss-balancing scalars.
    diff::Tensor& s_x() { return s_x_; }
    diff::Tensor& s_q() { return s_q_; }
    const diff::Tensor& s_x() const { return s_x_; }
    const diff::Tensor& s_q() const { return s_q_; }

    // All weight/bias tensors (subject to weight decay).
    std::vector<diff::Tensor> parameters() const;
    // parameters() plus s_x, s_q.
    std::vector<diff::Tensor> trainables() const;

    void save_checkpoint(const std::string& path) const;
    static Model load_checkpoint(const std::string& path);

  private:
    diff::Tensor apply_dense(const Dense& d, const diff::Tensor& x) const;
    diff::Tensor dropout(const diff::Tensor& x, bool train, std::mt19937_64* rng) const;

    ModelConfig cfg_;
    std::vector<Dense> encoder_;
    Dense gpru_fc1_, gpru_head_x_, gpru_head_q_;
    std::optional<Dense> rpru_fc1_, rpru_head_x_, rpru_head_q_;
    diff::Tensor s_x_, s_q_;
};

}  // namespace relpose::net
