#include "relpose/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <future>
#include <random>

#include <json.hpp>

#include "relpose/errors.hpp"
#include "relpose/evaluation.hpp"

namespace relpose::train {

using diff::Tensor;

Pairing pairing_from_string(const std::string& s) {
    if (s == "next") return Pairing::Next;
    if (s == "random") return Pairing::Random;
    throw Error("unknown pairing strategy: " + s);
}

std::string to_string(Pairing p) { return p == Pairing::Next ? "next" : "random"; }

namespace {

class AdamW {
  public:
    AdamW(std::vector<Tensor> decayed, std::vector<Tensor> undecayed, const TrainConfig& cfg)
        : cfg_(cfg) {
        for (auto& t : decayed) slots_.push_back({t, true});
        for (auto& t : undecayed) slots_.push_back({t, false});
        for (auto& s : slots_) {
            s.m.assign(s.param.numel(), 0.0);
            s.v.assign(s.param.numel(), 0.0);
        }
    }

    void step() {
        ++t_;
        const double bc1 = 1.0 - std::pow(cfg_.adam_beta1, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(cfg_.adam_beta2, static_cast<double>(t_));
        for (auto& s : slots_) {
            auto& p = s.param.mutable_values();
            const auto& g = s.param.grad();
            for (std::size_t i = 0; i < p.size(); ++i) {
                s.m[i] = cfg_.adam_beta1 * s.m[i] + (1.0 - cfg_.adam_beta1) * g[i];
                s.v[i] = cfg_.adam_beta2 * s.v[i] + (1.0 - cfg_.adam_beta2) * g[i] * g[i];
                const double mhat = s.m[i] / bc1;
                const double vhat = s.v[i] / bc2;
                p[i] -= cfg_.learning_rate * mhat / (std::sqrt(vhat) + cfg_.adam_eps);
                if (s.decay) p[i] -= cfg_.learning_rate * cfg_.weight_decay * p[i];
            }
        }
    }

    void zero_grad() {
        for (auto& s : slots_) s.param.zero_grad();
    }

  private:
    struct Slot {
        Tensor param;
        bool decay;
        std::vector<double> m, v;
    };
    TrainConfig cfg_;
    std::vector<Slot> slots_;
    std::uint64_t t_ = 0;
};

// successor of the reference within its sequence (predecessor when last);
// used as the triplet negative, "the image after the reference image"
std::size_t negative_index(const data::Scene& scene,
                           const std::vector<std::vector<std::size_t>>& seqs, std::size_t ref) {
    for (const auto& seq : seqs) {
        for (std::size_t k = 0; k < seq.size(); ++k) {
            if (seq[k] != ref) continue;
            if (k + 1 < seq.size()) return seq[k + 1];
            if (k > 0) return seq[k - 1];
            throw SequenceTooShort(scene.frames[ref].sequence_id);
        }
    }
    throw Error("reference frame not found in any sequence");
}

loss::PairForward forward_pair(const net::Model& model, const data::Scene& scene,
                               const data::TrainingPairSpec& spec, loss::Combination comb,
                               std::mt19937_64& rng,
                               const std::vector<std::vector<std::size_t>>& seqs) {
    loss::PairForward p;
    const auto& cur = scene.frames[spec.current];
    const auto& ref = scene.frames[spec.reference];
    p.f = model.encode(cur.descriptor, true, &rng);
    p.f_ref = model.encode(ref.descriptor, true, &rng);
    std::tie(p.x_hat, p.q_hat_raw) = model.gpru(p.f, true, &rng);
    std::tie(p.x_hat_ref, p.q_hat_ref_raw) = model.gpru(p.f_ref, true, &rng);
    if (loss::needs_rpru(comb))
        std::tie(p.x_rel_pred, p.q_rel_pred_raw) = model.rpru(p.f, p.f_ref, true, &rng);
    if (comb == loss::Combination::TripletVariant)
        p.f_neg = model.encode(scene.frames[negative_index(scene, seqs, spec.reference)].descriptor,
                               true, &rng);
    p.gt = cur.pose;
    p.gt_ref = ref.pose;
    p.gt_rel = spec.gt_rel;
    return p;
}

}  // namespace

TrainReport train(net::Model& model, const data::Scene& train_scene, const TrainConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(cfg.rng_seed);

    auto pairs = cfg.pairing == Pairing::Next
                     ? data::pair_next(train_scene)
                     : data::pair_random(train_scene, cfg.rng_seed ^ 0x9e3779b97f4a7c15ULL,
                                         cfg.random_within_sequence_only);
    const auto seqs = train_scene.sequences();

    AdamW opt(model.parameters(), {model.s_x(), model.s_q()}, cfg);
    loss::LossWeights weights{model.s_x(), model.s_q(), std::nullopt, cfg.alpha};
    loss::ComprehensiveOptions opts;
    opts.combination = cfg.combination;
    opts.global_both_frames = cfg.global_both_frames;
    opts.siamese_margin = cfg.margin;
    opts.triplet_margin = cfg.margin;

    TrainReport report;
    report.seed = cfg.rng_seed;

    for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        std::shuffle(pairs.begin(), pairs.end(), rng);
        double epoch_loss = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < pairs.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(start + cfg.batch_size, pairs.size());
            std::vector<loss::PairForward> batch;
            batch.reserve(end - start);
            Tensor total;
            try {
                for (std::size_t i = start; i < end; ++i)
                    batch.push_back(
                        forward_pair(model, train_scene, pairs[i], cfg.combination, rng, seqs));
                total = loss::comprehensive_loss(batch, weights, opts);
            } catch (const NonFiniteValue& e) {
                throw DivergedLoss(std::string("epoch ") + std::to_string(epoch) + ": " + e.what());
            }
            if (!std::isfinite(total.value()))
                throw DivergedLoss("epoch " + std::to_string(epoch) + ": non-finite loss");
            opt.zero_grad();
            total.backward();
            opt.step();
            epoch_loss += total.value();
            ++batches;
        }
        epoch_loss /= static_cast<double>(batches);
        report.epoch_losses.push_back(epoch_loss);
        ++report.epochs_run;

        const std::size_t w = cfg.convergence_window;
        if (report.epoch_losses.size() >= 2 * w) {
            auto avg = [&](std::size_t from, std::size_t to) {
                double acc = 0.0;
                for (std::size_t i = from; i < to; ++i) acc += report.epoch_losses[i];
                return acc / static_cast<double>(to - from);
            };
            const std::size_t n = report.epoch_losses.size();
            const double prev = avg(n - 2 * w, n - w);
            const double recent = avg(n - w, n);
            if ((prev - recent) / std::max(1e-8, std::abs(prev)) < cfg.convergence_threshold) {
                report.converged = true;
                break;
            }
        }
    }

    report.final_s_x = model.s_x().value();
    report.final_s_q = model.s_q().value();
    report.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

void write_train_report(const std::string& path, const TrainReport& report) {
    nlohmann::json j{{"epoch_losses", report.epoch_losses},
                     {"final_s_x", report.final_s_x},
                     {"final_s_q", report.final_s_q},
                     {"wall_time_s", report.wall_time_s},
                     {"seed", report.seed},
                     {"epochs_run", report.epochs_run},
                     {"converged", report.converged}};
    std::ofstream out(path);
    if (!out) throw Error("cannot write: " + path);
    out << j.dump(2) << "\n";
}

std::vector<AblationRow> run_ablation(const data::Scene& scene, const net::ModelConfig& model_cfg,
                                      const TrainConfig& base,
                                      const std::vector<loss::Combination>& combinations,
                                      const std::vector<std::uint64_t>& seeds) {
    const data::Scene train_scene = data::train_split(scene);
    const data::Scene eval_scene = data::test_split(scene);

    std::vector<std::future<AblationRow>> futures;
    for (auto comb : combinations) {
        for (auto seed : seeds) {
            futures.push_back(std::async(std::launch::async, [&, comb, seed]() {
                net::Model model(model_cfg, seed);
                TrainConfig cfg = base;
                cfg.combination = comb;
                cfg.rng_seed = seed;
                train(model, train_scene, cfg);
                const auto result = eval::evaluate(model, eval_scene);
                return AblationRow{scene.name, loss::to_string(comb), seed,
                                   result.median_position_error,
                                   result.median_orientation_error};
            }));
        }
    }
    std::vector<AblationRow> rows;
    for (auto& f : futures) rows.push_back(f.get());
    std::sort(rows.begin(), rows.end(), [](const AblationRow& a, const AblationRow& b) {
        return std::tie(a.combination, a.seed) < std::tie(b.combination, b.seed);
    });
    return rows;
}

void write_ablation_csv(const std::string& path, const std::vector<AblationRow>& rows) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write: " + path);
    out << "scene,combination,seed,median_pos_m,median_ort_deg\n";
    char buf[256];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%s,%s,%llu,%.3f,%.2f\n", r.scene.c_str(),
                      r.combination.c_str(), static_cast<unsigned long long>(r.seed),
                      r.median_pos_m, r.median_ort_deg);
        out << buf;
    }
}

double mean_aliased_feature_distance(const net::Model& model, const data::Scene& scene) {
    if (scene.aliased_pairs.empty()) throw Error("scene has no aliased pairs");
    double acc = 0.0;
    for (auto [a, b] : scene.aliased_pairs) {
        const auto fa = model.encode(scene.frames[a].descriptor).values();
        const auto fb = model.encode(scene.frames[b].descriptor).values();
        double d2 = 0.0;
        for (std::size_t i = 0; i < fa.size(); ++i) d2 += (fa[i] - fb[i]) * (fa[i] - fb[i]);
        acc += std::sqrt(d2);
    }
    return acc / static_cast<double>(scene.aliased_pairs.size());
}

}  // namespace relpose::train
