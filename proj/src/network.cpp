#include "relpose/network.hpp"

#include <fstream>

#include <json.hpp>

#include "relpose/errors.hpp"

namespace relpose::net {

using diff::Tensor;
using nlohmann::json;

namespace {

Dense make_dense(std::size_t out, std::size_t in, std::mt19937_64& rng) {
    // Xavier uniform
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    std::vector<double> w(out * in);
    for (auto& v : w) v = dist(rng);
    Dense d;
    d.weight = Tensor::from_matrix(out, in, std::move(w), true);
    d.bias = Tensor::zeros({out}, true);
    return d;
}

json dense_to_json(const Dense& d) {
    return json{{"rows", d.weight.shape()[0]},
                {"cols", d.weight.shape()[1]},
                {"weight", d.weight.values()},
                {"bias", d.bias.values()}};
}

Dense dense_from_json(const json& j) {
    Dense d;
    d.weight = Tensor::from_matrix(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>(),
                                   j.at("weight").get<std::vector<double>>(), true);
    d.bias = Tensor::from_vector(j.at("bias").get<std::vector<double>>(), true);
    return d;
}

}  // namespace

Model::Model(const ModelConfig& cfg, std::uint64_t init_seed) : cfg_(cfg) {
    std::mt19937_64 rng(init_seed);
    std::size_t in = cfg.encoder.input_dim;
    for (std::size_t h : cfg.encoder.hidden_dims) {
        encoder_.push_back(make_dense(h, in, rng));
        in = h;
    }
    encoder_.push_back(make_dense(cfg.encoder.feature_dim, in, rng));

    const std::size_t d = cfg.encoder.feature_dim;
    const std::size_t h = cfg.head_hidden;
    // quaternion heads start biased at the identity rotation so the raw
    // output can never be the unnormalizable zero quaternion
    gpru_fc1_ = make_dense(h, d, rng);
    gpru_head_x_ = make_dense(3, h, rng);
    gpru_head_q_ = make_dense(4, h, rng);
    gpru_head_q_.bias.mutable_values()[0] = 1.0;
    if (cfg.with_rpru) {
        rpru_fc1_ = make_dense(h, 2 * d, rng);
        rpru_head_x_ = make_dense(3, h, rng);
        rpru_head_q_ = make_dense(4, h, rng);
        rpru_head_q_->bias.mutable_values()[0] = 1.0;
    }
    s_x_ = Tensor::scalar(0.0, true);
    s_q_ = Tensor::scalar(-3.0, true);
}

Tensor Model::apply_dense(const Dense& d, const Tensor& x) const {
    return add(matvec(d.weight, x), d.bias);
}

Tensor Model::dropout(const Tensor& x, bool train, std::mt19937_64* rng) const {
    const double p = cfg_.encoder.dropout_rate;
    if (!train || p == 0.0) return x;
    if (rng == nullptr) throw Error("dropout in train mode needs an rng");
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> mask(x.numel());
    const double keep = 1.0 - p;
    for (auto& m : mask) m = (u(*rng) < p) ? 0.0 : 1.0 / keep;  // inverted dropout
    return mul(x, Tensor::from_vector(std::move(mask)));
}

Tensor Model::encode(const std::vector<double>& descriptor, bool train,
                     std::mt19937_64* rng) const {
    if (descriptor.size() != cfg_.encoder.input_dim) throw ShapeMismatch("encode input");
    Tensor x = Tensor::from_vector(descriptor);
    for (std::size_t i = 0; i + 1 < encoder_.size(); ++i) {
        x = dropout(relu(apply_dense(encoder_[i], x)), train, rng);
    }
    return apply_dense(encoder_.back(), x);
}

std::pair<Tensor, Tensor> Model::gpru(const Tensor& f, bool train, std::mt19937_64* rng) const {
    if (f.shape() != std::vector<std::size_t>{cfg_.encoder.feature_dim})
        throw ShapeMismatch("gpru input");
    Tensor h = dropout(relu(apply_dense(gpru_fc1_, f)), train, rng);
    return {apply_dense(gpru_head_x_, h), apply_dense(gpru_head_q_, h)};
}

std::pair<Tensor, Tensor> Model::rpru(const Tensor& f, const Tensor& f_ref, bool train,
                                      std::mt19937_64* rng) const {
    if (!has_rpru()) throw MissingHead("rpru");
    const std::vector<std::size_t> want{cfg_.encoder.feature_dim};
    if (f.shape() != want || f_ref.shape() != want) throw ShapeMismatch("rpru input");
    Tensor h = dropout(relu(apply_dense(*rpru_fc1_, concat(f, f_ref))), train, rng);
    return {apply_dense(*rpru_head_x_, h), apply_dense(*rpru_head_q_, h)};
}

Pose Model::predict_pose(const std::vector<double>& descriptor) const {
    Tensor f = encode(descriptor);
    auto [xh, qh] = gpru(f);
    Pose p;
    p.position = {xh.values()[0], xh.values()[1], xh.values()[2]};
    Quaternion q{qh.values()[0], qh.values()[1], qh.values()[2], qh.values()[3]};
    p.orientation = canonicalize_hemisphere(quat_normalize(q));
    return p;
}

std::vector<Tensor> Model::parameters() const {
    std::vector<Tensor> out;
    auto push = [&out](const Dense& d) {
        out.push_back(d.weight);
        out.push_back(d.bias);
    };
    for (const auto& d : encoder_) push(d);
    push(gpru_fc1_);
    push(gpru_head_x_);
    push(gpru_head_q_);
    if (has_rpru()) {
        push(*rpru_fc1_);
        push(*rpru_head_x_);
        push(*rpru_head_q_);
    }
    return out;
}

std::vector<Tensor> Model::trainables() const {
    auto out = parameters();
    out.push_back(s_x_);
    out.push_back(s_q_);
    return out;
}

void Model::save_checkpoint(const std::string& path) const {
    json j;
    j["format_version"] = 1;
    j["config"] = {{"input_dim", cfg_.encoder.input_dim},
                   {"hidden_dims", cfg_.encoder.hidden_dims},
                   {"feature_dim", cfg_.encoder.feature_dim},
                   {"dropout_rate", cfg_.encoder.dropout_rate},
                   {"head_hidden", cfg_.head_hidden},
                   {"with_rpru", has_rpru()}};
    json params;
    for (std::size_t i = 0; i < encoder_.size(); ++i)
        params["encoder." + std::to_string(i)] = dense_to_json(encoder_[i]);
    params["gpru.fc1"] = dense_to_json(gpru_fc1_);
    params["gpru.head_x"] = dense_to_json(gpru_head_x_);
    params["gpru.head_q"] = dense_to_json(gpru_head_q_);
    if (has_rpru()) {
        params["rpru.fc1"] = dense_to_json(*rpru_fc1_);
        params["rpru.head_x"] = dense_to_json(*rpru_head_x_);
        params["rpru.head_q"] = dense_to_json(*rpru_head_q_);
    }
    j["params"] = std::move(params);
    j["loss_weights"] = {{"s_x", s_x_.value()}, {"s_q", s_q_.value()}};
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write checkpoint: " + path);
    out << j.dump(2) << "\n";
}

Model Model::load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read checkpoint: " + path);
    json j = json::parse(in);
    if (j.at("format_version").get<int>() != 1) throw Error("unsupported checkpoint version");

    Model m;
    const auto& c = j.at("config");
    m.cfg_.encoder.input_dim = c.at("input_dim").get<std::size_t>();
    m.cfg_.encoder.hidden_dims = c.at("hidden_dims").get<std::vector<std::size_t>>();
    m.cfg_.encoder.feature_dim = c.at("feature_dim").get<std::size_t>();
    m.cfg_.encoder.dropout_rate = c.at("dropout_rate").get<double>();
    m.cfg_.head_hidden = c.at("head_hidden").get<std::size_t>();
    m.cfg_.with_rpru = c.at("with_rpru").get<bool>();

    const auto& params = j.at("params");
    for (std::size_t i = 0; i <= m.cfg_.encoder.hidden_dims.size(); ++i)
        m.encoder_.push_back(dense_from_json(params.at("encoder." + std::to_string(i))));
    m.gpru_fc1_ = dense_from_json(params.at("gpru.fc1"));
    m.gpru_head_x_ = dense_from_json(params.at("gpru.head_x"));
    m.gpru_head_q_ = dense_from_json(params.at("gpru.head_q"));
    if (m.cfg_.with_rpru && params.contains("rpru.fc1")) {
        m.rpru_fc1_ = dense_from_json(params.at("rpru.fc1"));
        m.rpru_head_x_ = dense_from_json(params.at("rpru.head_x"));
        m.rpru_head_q_ = dense_from_json(params.at("rpru.head_q"));
    } else {
        m.cfg_.with_rpru = false;
    }
    m.s_x_ = Tensor::scalar(j.at("loss_weights").at("s_x").get<double>(), true);
    m.s_q_ = Tensor::scalar(j.at("loss_weights").at("s_q").get<double>(), true);
    return m;
}

}  // namespace relpose::net
