#include "relpose/evaluation.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "relpose/errors.hpp"

namespace relpose::eval {

double median(std::vector<double> values) {
    if (values.empty()) throw Error("median of empty list");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    if (n % 2 == 1) return values[n / 2];
    return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

namespace {

SceneResult finalize(SceneResult r) {
    r.median_position_error = median(r.position_errors);
    r.median_orientation_error = median(r.orientation_errors);
    return r;
}

}  // namespace

SceneResult evaluate(const net::Model& model, const data::Scene& test_scene) {
    if (test_scene.frames.empty()) throw EmptyTestSplit();
    SceneResult r;
    r.scene_name = test_scene.name;
    for (const auto& frame : test_scene.frames) {
        const Pose pred = model.predict_pose(frame.descriptor);
        r.position_errors.push_back(position_error_m(pred.position, frame.pose.position));
        r.orientation_errors.push_back(
            angular_error_deg(pred.orientation, frame.pose.orientation));
    }
    return finalize(std::move(r));
}

SceneResult evaluate_predictions(const std::unordered_map<std::string, Pose>& predictions,
                                 const data::Scene& test_scene) {
    if (test_scene.frames.empty()) throw EmptyTestSplit();
    SceneResult r;
    r.scene_name = test_scene.name;
    for (const auto& frame : test_scene.frames) {
        auto it = predictions.find(frame.id);
        if (it == predictions.end()) throw Error("no prediction for frame " + frame.id);
        r.position_errors.push_back(position_error_m(it->second.position, frame.pose.position));
        r.orientation_errors.push_back(
            angular_error_deg(it->second.orientation, frame.pose.orientation));
    }
    return finalize(std::move(r));
}

std::unordered_map<std::string, Pose> load_predictions(const std::string& file) {
    std::ifstream in(file);
    if (!in) throw Error("cannot open: " + file);
    std::unordered_map<std::string, Pose> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string id;
        double x, y, z, w, p, q, rr;
        if (!(ss >> id >> x >> y >> z >> w >> p >> q >> rr)) throw MalformedLine(line);
        out[id] = Pose{{x, y, z}, canonicalize_hemisphere(quat_normalize({w, p, q, rr}))};
    }
    return out;
}

std::pair<double, double> average_over_scenes(const std::vector<SceneResult>& results) {
    if (results.empty()) throw Error("average_over_scenes: no results");
    double pos = 0.0, ort = 0.0;
    for (const auto& r : results) {
        pos += r.median_position_error;
        ort += r.median_orientation_error;
    }
    const double n = static_cast<double>(results.size());
    return {pos / n, ort / n};
}

void write_result_csv(const std::string& file, const SceneResult& r) {
    std::ofstream out(file);
    if (!out) throw Error("cannot write: " + file);
    out << "scene,median_pos_m,median_ort_deg\n";
    char buf[128];
    // meters to 3 decimals, degrees to 2
    std::snprintf(buf, sizeof(buf), "%s,%.3f,%.2f\n", r.scene_name.c_str(),
                  r.median_position_error, r.median_orientation_error);
    out << buf;
    out << "frame_index,pos_error_m,ort_error_deg\n";
    for (std::size_t i = 0; i < r.position_errors.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g\n", i, r.position_errors[i],
                      r.orientation_errors[i]);
        out << buf;
    }
}

void write_result_json(const std::string& file, const SceneResult& r) {
    nlohmann::json j{{"scene", r.scene_name},
                     {"median_pos_m", r.median_position_error},
                     {"median_ort_deg", r.median_orientation_error},
                     {"pos_errors_m", r.position_errors},
                     {"ort_errors_deg", r.orientation_errors}};
    std::ofstream out(file);
    if (!out) throw Error("cannot write: " + file);
    out << j.dump(2) << "\n";
}

}  // namespace relpose::eval
