// pybind11 module exposing the main operations: pose algebra, synthetic
// scenes and pose-file I/O, the siamese regressor, training/ablation, and
// evaluation. Thin wrappers only; all behaviour lives in the C++ core.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "relpose/dataset.hpp"
#include "relpose/errors.hpp"
#include "relpose/evaluation.hpp"
#include "relpose/gradcheck_suite.hpp"
#include "relpose/losses.hpp"
#include "relpose/network.hpp"
#include "relpose/pose.hpp"
#include "relpose/trainer.hpp"

namespace py = pybind11;
using namespace relpose;

PYBIND11_MODULE(_relpose, m) {
    m.doc() = "geometry-aware siamese pose regression core";

    py::register_exception<Error>(m, "RelposeError", PyExc_RuntimeError);

    // ---- pose algebra -----------------------------------------------------
    py::class_<Quaternion>(m, "Quaternion")
        .def(py::init<>())
        .def(py::init([](double w, double x, double y, double z) {
                 return Quaternion{w, x, y, z};
             }),
             py::arg("w"), py::arg("x"), py::arg("y"), py::arg("z"))
        .def_readwrite("w", &Quaternion::w)
        .def_readwrite("x", &Quaternion::x)
        .def_readwrite("y", &Quaternion::y)
        .def_readwrite("z", &Quaternion::z)
        .def("__eq__", [](const Quaternion& a, const Quaternion& b) { return a == b; })
        .def("__repr__", [](const Quaternion& q) {
            return "Quaternion(w=" + std::to_string(q.w) + ", x=" + std::to_string(q.x) +
                   ", y=" + std::to_string(q.y) + ", z=" + std::to_string(q.z) + ")";
        });

    py::class_<Position>(m, "Position")
        .def(py::init<>())
        .def(py::init([](double px, double py_, double pz) {
                 return Position{px, py_, pz};
             }),
             py::arg("px"), py::arg("py"), py::arg("pz"))
        .def_readwrite("px", &Position::px)
        .def_readwrite("py", &Position::py)
        .def_readwrite("pz", &Position::pz)
        .def("__eq__", [](const Position& a, const Position& b) { return a == b; })
        .def("__repr__", [](const Position& p) {
            return "Position(" + std::to_string(p.px) + ", " + std::to_string(p.py) + ", " +
                   std::to_string(p.pz) + ")";
        });

    py::class_<Pose>(m, "Pose")
        .def(py::init<>())
        .def_readwrite("position", &Pose::position)
        .def_readwrite("orientation", &Pose::orientation);

    py::class_<RelativePose>(m, "RelativePose")
        .def(py::init<>())
        .def_readwrite("x_rel", &RelativePose::x_rel)
        .def_readwrite("q_rel", &RelativePose::q_rel);

    m.def("quat_norm", &quat_norm);
    m.def("quat_dot", &quat_dot);
    m.def("quat_normalize", &quat_normalize);
    m.def("quat_conjugate", &quat_conjugate);
    m.def("quat_multiply", &quat_multiply);
    m.def("canonicalize_hemisphere", &canonicalize_hemisphere);
    m.def("is_unit", &is_unit, py::arg("q"), py::arg("tol") = 1e-9);
    m.def("relative_pose", &relative_pose, py::arg("pose"), py::arg("reference"));
    m.def("angular_error_deg", &angular_error_deg);
    m.def("position_error_m", &position_error_m);

    // ---- dataset ----------------------------------------------------------
    py::class_<data::Frame>(m, "Frame")
        .def(py::init<>())
        .def_readwrite("id", &data::Frame::id)
        .def_readwrite("sequence_id", &data::Frame::sequence_id)
        .def_readwrite("descriptor", &data::Frame::descriptor)
        .def_readwrite("pose", &data::Frame::pose)
        .def_readwrite("is_test", &data::Frame::is_test);

    py::class_<data::Scene>(m, "Scene")
        .def(py::init<>())
        .def_readwrite("name", &data::Scene::name)
        .def_readwrite("split", &data::Scene::split)
        .def_readwrite("frames", &data::Scene::frames)
        .def_readwrite("aliased_pairs", &data::Scene::aliased_pairs)
        .def("sequences", &data::Scene::sequences)
        .def("index_of", &data::Scene::index_of)
        .def("__len__", [](const data::Scene& s) { return s.frames.size(); });

    py::class_<data::SynthSceneConfig>(m, "SynthSceneConfig")
        .def(py::init<>())
        .def_readwrite("num_sequences", &data::SynthSceneConfig::num_sequences)
        .def_readwrite("frames_per_sequence", &data::SynthSceneConfig::frames_per_sequence)
        .def_readwrite("workspace_extent", &data::SynthSceneConfig::workspace_extent)
        .def_readwrite("descriptor_dim", &data::SynthSceneConfig::descriptor_dim)
        .def_readwrite("descriptor_noise_sigma", &data::SynthSceneConfig::descriptor_noise_sigma)
        .def_readwrite("aliasing_fraction", &data::SynthSceneConfig::aliasing_fraction)
        .def_readwrite("aliasing_pair_min_distance",
                       &data::SynthSceneConfig::aliasing_pair_min_distance)
        .def_readwrite("test_fraction", &data::SynthSceneConfig::test_fraction)
        .def_readwrite("rng_seed", &data::SynthSceneConfig::rng_seed);

    py::class_<data::TrainingPairSpec>(m, "TrainingPairSpec")
        .def_readonly("current", &data::TrainingPairSpec::current)
        .def_readonly("reference", &data::TrainingPairSpec::reference)
        .def_readonly("current_frame_id", &data::TrainingPairSpec::current_frame_id)
        .def_readonly("reference_frame_id", &data::TrainingPairSpec::reference_frame_id)
        .def_readonly("gt_rel", &data::TrainingPairSpec::gt_rel);

    m.def("generate_synth_scene", &data::generate_synth_scene);
    m.def("train_split", &data::train_split);
    m.def("test_split", &data::test_split);
    m.def("pair_next", &data::pair_next);
    m.def("pair_random", &data::pair_random, py::arg("scene"), py::arg("rng_seed"),
          py::arg("within_sequence_only") = false);
    m.def("load_7scenes_poses", &data::load_7scenes_poses, py::arg("directory"),
          py::arg("descriptor_sidecar") = "");
    m.def("write_7scenes_poses", &data::write_7scenes_poses);
    m.def("load_cambridge_poses", &data::load_cambridge_poses, py::arg("file"),
          py::arg("descriptor_sidecar") = "");
    m.def("write_cambridge_poses", &data::write_cambridge_poses);
    m.def("load_scene_jsonl", &data::load_scene_jsonl);
    m.def("write_scene_jsonl", &data::write_scene_jsonl);
    m.def("mean_pair_descriptor_distance",
          [](const data::Scene& scene, const std::vector<data::TrainingPairSpec>& pairs) {
              return data::pair_similarity_stats(scene, pairs).mean_descriptor_distance;
          });

    // ---- network ----------------------------------------------------------
    py::class_<net::EncoderConfig>(m, "EncoderConfig")
        .def(py::init<>())
        .def_readwrite("input_dim", &net::EncoderConfig::input_dim)
        .def_readwrite("hidden_dims", &net::EncoderConfig::hidden_dims)
        .def_readwrite("feature_dim", &net::EncoderConfig::feature_dim)
        .def_readwrite("dropout_rate", &net::EncoderConfig::dropout_rate);

    py::class_<net::ModelConfig>(m, "ModelConfig")
        .def(py::init<>())
        .def_readwrite("encoder", &net::ModelConfig::encoder)
        .def_readwrite("head_hidden", &net::ModelConfig::head_hidden)
        .def_readwrite("with_rpru", &net::ModelConfig::with_rpru);

    py::class_<net::Model>(m, "Model")
        .def(py::init<const net::ModelConfig&, std::uint64_t>(), py::arg("config"),
             py::arg("init_seed"))
        .def_property_readonly("config", &net::Model::config)
        .def_property_readonly("has_rpru", &net::Model::has_rpru)
        .def("encode",
             [](const net::Model& self, const std::vector<double>& descriptor) {
                 return self.encode(descriptor).values();
             })
        .def("predict_pose", &net::Model::predict_pose)
        .def_property_readonly("s_x", [](const net::Model& self) { return self.s_x().value(); })
        .def_property_readonly("s_q", [](const net::Model& self) { return self.s_q().value(); })
        .def("save_checkpoint", &net::Model::save_checkpoint)
        .def_static("load_checkpoint", &net::Model::load_checkpoint);

    // ---- training ---------------------------------------------------------
    py::enum_<loss::Combination>(m, "Combination")
        .value("G", loss::Combination::G)
        .value("GC", loss::Combination::GC)
        .value("GCR", loss::Combination::GCR)
        .value("GM", loss::Combination::GM)
        .value("GR", loss::Combination::GR)
        .value("Full", loss::Combination::Full)
        .value("SiameseVariant", loss::Combination::SiameseVariant)
        .value("TripletVariant", loss::Combination::TripletVariant);
    m.def("combination_from_string", &loss::combination_from_string);
    m.def("combination_to_string",
          [](loss::Combination c) { return loss::to_string(c); });

    py::enum_<train::Pairing>(m, "Pairing")
        .value("Next", train::Pairing::Next)
        .value("Random", train::Pairing::Random);

    py::class_<train::TrainConfig>(m, "TrainConfig")
        .def(py::init<>())
        .def_readwrite("combination", &train::TrainConfig::combination)
        .def_readwrite("learning_rate", &train::TrainConfig::learning_rate)
        .def_readwrite("adam_beta1", &train::TrainConfig::adam_beta1)
        .def_readwrite("adam_beta2", &train::TrainConfig::adam_beta2)
        .def_readwrite("adam_eps", &train::TrainConfig::adam_eps)
        .def_readwrite("weight_decay", &train::TrainConfig::weight_decay)
        .def_readwrite("batch_size", &train::TrainConfig::batch_size)
        .def_readwrite("max_epochs", &train::TrainConfig::max_epochs)
        .def_readwrite("convergence_window", &train::TrainConfig::convergence_window)
        .def_readwrite("convergence_threshold", &train::TrainConfig::convergence_threshold)
        .def_readwrite("rng_seed", &train::TrainConfig::rng_seed)
        .def_readwrite("pairing", &train::TrainConfig::pairing)
        .def_readwrite("random_within_sequence_only",
                       &train::TrainConfig::random_within_sequence_only)
        .def_readwrite("global_both_frames", &train::TrainConfig::global_both_frames)
        .def_readwrite("alpha", &train::TrainConfig::alpha)
        .def_readwrite("margin", &train::TrainConfig::margin);

    py::class_<train::TrainReport>(m, "TrainReport")
        .def_readonly("epoch_losses", &train::TrainReport::epoch_losses)
        .def_readonly("final_s_x", &train::TrainReport::final_s_x)
        .def_readonly("final_s_q", &train::TrainReport::final_s_q)
        .def_readonly("wall_time_s", &train::TrainReport::wall_time_s)
        .def_readonly("seed", &train::TrainReport::seed)
        .def_readonly("epochs_run", &train::TrainReport::epochs_run)
        .def_readonly("converged", &train::TrainReport::converged);

    py::class_<train::AblationRow>(m, "AblationRow")
        .def_readonly("scene", &train::AblationRow::scene)
        .def_readonly("combination", &train::AblationRow::combination)
        .def_readonly("seed", &train::AblationRow::seed)
        .def_readonly("median_pos_m", &train::AblationRow::median_pos_m)
        .def_readonly("median_ort_deg", &train::AblationRow::median_ort_deg);

    m.def("train", &train::train, py::arg("model"), py::arg("train_scene"), py::arg("config"),
          py::call_guard<py::gil_scoped_release>());
    m.def("run_ablation", &train::run_ablation, py::arg("scene"), py::arg("model_config"),
          py::arg("base_config"), py::arg("combinations"), py::arg("seeds"),
          py::call_guard<py::gil_scoped_release>());
    m.def("mean_aliased_feature_distance", &train::mean_aliased_feature_distance);

    // ---- evaluation -------------------------------------------------------
    py::class_<eval::SceneResult>(m, "SceneResult")
        .def_readonly("scene_name", &eval::SceneResult::scene_name)
        .def_readonly("median_position_error", &eval::SceneResult::median_position_error)
        .def_readonly("median_orientation_error", &eval::SceneResult::median_orientation_error)
        .def_readonly("position_errors", &eval::SceneResult::position_errors)
        .def_readonly("orientation_errors", &eval::SceneResult::orientation_errors);

    m.def("median", &eval::median);
    m.def("evaluate", &eval::evaluate, py::arg("model"), py::arg("test_scene"));
    m.def("average_over_scenes", &eval::average_over_scenes);

    // ---- gradient checks --------------------------------------------------
    py::class_<loss::SuiteEntry>(m, "SuiteEntry")
        .def_readonly("name", &loss::SuiteEntry::name)
        .def_readonly("points", &loss::SuiteEntry::points)
        .def_readonly("max_rel_error", &loss::SuiteEntry::max_rel_error)
        .def_readonly("passed", &loss::SuiteEntry::passed);

    m.def("run_gradcheck_suite", &loss::run_gradcheck_suite, py::arg("points_per_loss") = 100,
          py::arg("seed") = 0, py::arg("step") = 1e-6, py::arg("tolerance") = 1e-5);
}
