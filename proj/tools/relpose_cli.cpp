#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "relpose/dataset.hpp"
#include "relpose/errors.hpp"
#include "relpose/evaluation.hpp"
#include "relpose/gradcheck_suite.hpp"
#include "relpose/losses.hpp"
#include "relpose/network.hpp"
#include "relpose/runconfig.hpp"
#include "relpose/trainer.hpp"

namespace fs = std::filesystem;
using namespace relpose;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitData = 2;
constexpr int kExitDiverged = 3;

bool verbose_logging() {
    const char* v = std::getenv("RELPOSE_LOG");
    return v != nullptr && std::string(v) == "debug";
}

struct CommonArgs {
    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string out_dir = "relpose_out";
    std::vector<std::string> overrides;  // key=value, win over the file
};

void add_common(CLI::App* sub, CommonArgs& args) {
    sub->add_option("--config", args.config_path, "key=value config file");
    sub->add_option("--seed", args.seed, "root RNG seed")->each([&args](const std::string&) {
        args.seed_set = true;
    });
    sub->add_option("--out", args.out_dir, "output directory");
    sub->add_option("--set", args.overrides, "config override key=value (repeatable)");
}

cli::RunConfig load_config(const CommonArgs& args) {
    cli::RunConfig cfg;
    if (!args.config_path.empty()) cfg = cli::RunConfig::from_file(args.config_path);
    for (const auto& kv : args.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw Error("--set expects key=value, got: " + kv);
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    return cfg;
}

data::SynthSceneConfig synth_config(const cli::RunConfig& cfg, std::uint64_t seed) {
    data::SynthSceneConfig sc;
    sc.num_sequences = cfg.get_uint("synth.num_sequences", sc.num_sequences);
    sc.frames_per_sequence = cfg.get_uint("synth.frames_per_sequence", sc.frames_per_sequence);
    sc.workspace_extent = cfg.get_double("synth.workspace_extent", sc.workspace_extent);
    sc.descriptor_dim = cfg.get_uint("synth.descriptor_dim", sc.descriptor_dim);
    sc.descriptor_noise_sigma =
        cfg.get_double("synth.descriptor_noise_sigma", sc.descriptor_noise_sigma);
    sc.aliasing_fraction = cfg.get_double("synth.aliasing_fraction", sc.aliasing_fraction);
    sc.aliasing_pair_min_distance =
        cfg.get_double("synth.aliasing_pair_min_distance", sc.aliasing_pair_min_distance);
    sc.test_fraction = cfg.get_double("synth.test_fraction", sc.test_fraction);
    sc.rng_seed = seed;
    return sc;
}

data::Scene build_scene(const cli::RunConfig& cfg, std::uint64_t seed) {
    const std::string source = cfg.get_string("scene.source", "synth");
    if (source == "synth") return data::generate_synth_scene(synth_config(cfg, seed));
    const std::string path = cfg.get_string("scene.path", "");
    if (path.empty()) throw Error("scene.path required for source " + source);
    const std::string sidecar = cfg.get_string("scene.descriptors", "");
    if (source == "jsonl") return data::load_scene_jsonl(path);
    if (source == "7scenes") return data::load_7scenes_poses(path, sidecar);
    if (source == "cambridge") return data::load_cambridge_poses(path, sidecar);
    throw Error("unknown scene.source: " + source);
}

net::ModelConfig model_config(const cli::RunConfig& cfg, const data::Scene& scene) {
    net::ModelConfig mc;
    std::size_t default_input = mc.encoder.input_dim;
    if (!scene.frames.empty() && !scene.frames.front().descriptor.empty())
        default_input = scene.frames.front().descriptor.size();
    mc.encoder.input_dim = cfg.get_uint("model.input_dim", default_input);
    std::vector<std::string> hidden =
        cfg.get_list("model.hidden_dims", {"128", "128"});
    mc.encoder.hidden_dims.clear();
    for (const auto& h : hidden) mc.encoder.hidden_dims.push_back(std::stoul(h));
    mc.encoder.feature_dim = cfg.get_uint("model.feature_dim", 64);
    mc.encoder.dropout_rate = cfg.get_double("model.dropout_rate", 0.2);
    mc.head_hidden = cfg.get_uint("model.head_hidden", 128);
    mc.with_rpru = cfg.get_bool("model.with_rpru", true);
    return mc;
}

train::TrainConfig train_config(const cli::RunConfig& cfg, std::uint64_t seed) {
    train::TrainConfig tc;
    tc.combination = loss::combination_from_string(cfg.get_string("train.combination", "full"));
    tc.learning_rate = cfg.get_double("train.learning_rate", tc.learning_rate);
    tc.adam_beta1 = cfg.get_double("train.adam_beta1", tc.adam_beta1);
    tc.adam_beta2 = cfg.get_double("train.adam_beta2", tc.adam_beta2);
    tc.weight_decay = cfg.get_double("train.weight_decay", tc.weight_decay);
    tc.batch_size = cfg.get_uint("train.batch_size", tc.batch_size);
    tc.max_epochs = cfg.get_uint("train.max_epochs", tc.max_epochs);
    tc.convergence_window = cfg.get_uint("train.convergence_window", tc.convergence_window);
    tc.convergence_threshold =
        cfg.get_double("train.convergence_threshold", tc.convergence_threshold);
    tc.pairing = train::pairing_from_string(cfg.get_string("train.pairing", "next"));
    tc.random_within_sequence_only =
        cfg.get_bool("train.random_within_sequence_only", tc.random_within_sequence_only);
    tc.global_both_frames = cfg.get_bool("train.global_both_frames", tc.global_both_frames);
    tc.alpha = cfg.get_double("train.alpha", tc.alpha);
    tc.margin = cfg.get_double("train.margin", tc.margin);
    tc.rng_seed = seed;
    return tc;
}

void write_run_meta(const CommonArgs& args, const cli::RunConfig& cfg, const std::string& command) {
    nlohmann::json j{{"command", command}, {"seed", args.seed}};
    for (const auto& [k, v] : cfg.entries()) j["config"][k] = v;
    std::ofstream out(fs::path(args.out_dir) / "run_meta.json");
    out << j.dump(2) << "\n";
}

data::Scene pick_train_split(const data::Scene& scene) {
    auto tr = data::train_split(scene);
    return tr.frames.empty() ? scene : tr;
}

data::Scene pick_test_split(const data::Scene& scene) {
    auto te = data::test_split(scene);
    return te.frames.empty() ? scene : te;
}

int cmd_train(const CommonArgs& args) {
    const auto cfg = load_config(args);
    fs::create_directories(args.out_dir);
    write_run_meta(args, cfg, "train");
    const auto scene = build_scene(cfg, args.seed);
    net::Model model(model_config(cfg, scene), args.seed);
    const auto report = train::train(model, pick_train_split(scene), train_config(cfg, args.seed));
    model.save_checkpoint((fs::path(args.out_dir) / "checkpoint.json").string());
    train::write_train_report((fs::path(args.out_dir) / "train_report.json").string(), report);
    if (verbose_logging())
        for (std::size_t e = 0; e < report.epoch_losses.size(); ++e)
            std::cerr << "epoch " << e << " loss " << report.epoch_losses[e] << "\n";
    std::cout << "trained " << report.epochs_run << " epochs, final loss "
              << report.epoch_losses.back() << ", checkpoint written to " << args.out_dir << "\n";
    return kExitOk;
}

int cmd_evaluate(const CommonArgs& args) {
    const auto cfg = load_config(args);
    fs::create_directories(args.out_dir);
    write_run_meta(args, cfg, "evaluate");
    const auto scene = build_scene(cfg, args.seed);
    const auto test_scene = pick_test_split(scene);

    eval::SceneResult result;
    const std::string predictions = cfg.get_string("eval.predictions", "");
    if (!predictions.empty()) {
        result = eval::evaluate_predictions(eval::load_predictions(predictions), test_scene);
    } else {
        const std::string ckpt = cfg.get_string("eval.checkpoint", "");
        if (ckpt.empty()) throw Error("evaluate needs eval.checkpoint or eval.predictions");
        result = eval::evaluate(net::Model::load_checkpoint(ckpt), test_scene);
    }
    eval::write_result_csv((fs::path(args.out_dir) / "result.csv").string(), result);
    eval::write_result_json((fs::path(args.out_dir) / "result.json").string(), result);
    std::printf("%s: median %.3f m, %.2f deg over %zu frames\n", result.scene_name.c_str(),
                result.median_position_error, result.median_orientation_error,
                result.position_errors.size());
    return kExitOk;
}

int cmd_ablate(const CommonArgs& args) {
    const auto cfg = load_config(args);
    fs::create_directories(args.out_dir);
    write_run_meta(args, cfg, "ablate");
    const auto scene = build_scene(cfg, args.seed);

    std::vector<loss::Combination> combos;
    for (const auto& c : cfg.get_list("ablate.combinations", {"G", "full"}))
        combos.push_back(loss::combination_from_string(c));
    std::vector<std::uint64_t> seeds;
    for (const auto& s : cfg.get_list("ablate.seeds", {"1", "2", "3", "4", "5"}))
        seeds.push_back(std::stoull(s));

    const auto rows = train::run_ablation(scene, model_config(cfg, scene),
                                          train_config(cfg, args.seed), combos, seeds);
    const auto csv = (fs::path(args.out_dir) / "ablation.csv").string();
    train::write_ablation_csv(csv, rows);
    for (const auto& r : rows)
        std::printf("%-8s seed %llu: %.3f m, %.2f deg\n", r.combination.c_str(),
                    static_cast<unsigned long long>(r.seed), r.median_pos_m, r.median_ort_deg);
    std::cout << "wrote " << csv << "\n";
    return kExitOk;
}

int cmd_pair_stats(const CommonArgs& args) {
    const auto cfg = load_config(args);
    fs::create_directories(args.out_dir);
    write_run_meta(args, cfg, "pair-stats");
    const auto scene = build_scene(cfg, args.seed);
    const auto next_stats = data::pair_similarity_stats(scene, data::pair_next(scene));
    const auto random_stats =
        data::pair_similarity_stats(scene, data::pair_random(scene, args.seed));
    std::ofstream out(fs::path(args.out_dir) / "pair_stats.csv");
    out << "scene,seed,strategy,mean_descriptor_distance\n";
    out << scene.name << "," << args.seed << ",next," << next_stats.mean_descriptor_distance
        << "\n";
    out << scene.name << "," << args.seed << ",random," << random_stats.mean_descriptor_distance
        << "\n";
    std::printf("next %.4f vs random %.4f\n", next_stats.mean_descriptor_distance,
                random_stats.mean_descriptor_distance);
    return kExitOk;
}

int cmd_gradcheck(const CommonArgs& args) {
    const auto cfg = load_config(args);
    fs::create_directories(args.out_dir);
    write_run_meta(args, cfg, "gradcheck");
    const auto points = cfg.get_uint("gradcheck.points", 100);
    const auto results = loss::run_gradcheck_suite(points, args.seed);
    bool all_passed = true;
    std::ofstream out(fs::path(args.out_dir) / "gradcheck.txt");
    for (const auto& r : results) {
        const char* tag = r.passed ? "PASS" : "FAIL";
        std::printf("[%s] %-22s %zu points, max rel err %.3e\n", tag, r.name.c_str(), r.points,
                    r.max_rel_error);
        out << tag << " " << r.name << " " << r.points << " " << r.max_rel_error << "\n";
        all_passed = all_passed && r.passed;
    }
    return all_passed ? kExitOk : kExitDiverged;
}

int cmd_synth(const CommonArgs& args) {
    const auto cfg = load_config(args);
    fs::create_directories(args.out_dir);
    write_run_meta(args, cfg, "synth");
    const auto scene = data::generate_synth_scene(synth_config(cfg, args.seed));
    const auto path = (fs::path(args.out_dir) / "scene.jsonl").string();
    data::write_scene_jsonl(path, scene);
    if (!scene.aliased_pairs.empty()) {
        std::ofstream out(fs::path(args.out_dir) / "aliased_pairs.txt");
        for (auto [a, b] : scene.aliased_pairs)
            out << scene.frames[a].id << " " << scene.frames[b].id << "\n";
    }
    std::cout << "wrote " << scene.frames.size() << " frames to " << path << " ("
              << scene.aliased_pairs.size() << " aliased pairs)\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"geometry-aware siamese pose regression toolkit"};
    app.require_subcommand(1);

    CommonArgs args;
    int (*handler)(const CommonArgs&) = nullptr;

    auto wire = [&](const char* name, const char* desc, int (*fn)(const CommonArgs&)) {
        CLI::App* sub = app.add_subcommand(name, desc);
        add_common(sub, args);
        sub->callback([&handler, fn]() { handler = fn; });
        return sub;
    };
    wire("train", "train a model and write a checkpoint", cmd_train);
    wire("evaluate", "median-error evaluation of a checkpoint or prediction file", cmd_evaluate);
    wire("ablate", "train+evaluate across loss combinations and seeds", cmd_ablate);
    wire("pair-stats", "paired-descriptor similarity of next vs random pairing", cmd_pair_stats);
    wire("gradcheck", "finite-difference check of every loss gradient", cmd_gradcheck);
    wire("synth", "generate a synthetic scene as JSON-lines", cmd_synth);

    CLI11_PARSE(app, argc, argv);

    try {
        return handler(args);
    } catch (const DivergedLoss& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDiverged;
    } catch (const MalformedPoseFile& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const NonOrthogonalRotation& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const MalformedLine& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const SequenceTooShort& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const InfeasibleAliasing& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const EmptyTestSplit& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
}
