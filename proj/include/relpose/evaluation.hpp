#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "relpose/dataset.hpp"
#include "relpose/network.hpp"
#include "relpose/pose.hpp"

namespace relpose::eval {

struct SceneResult {
    std::string scene_name;
    double median_position_error = 0.0;     // meters
    double median_orientation_error = 0.0;  // degrees
    std::vector<double> position_errors;
    std::vector<double> orientation_errors;
};

// midpoint convention: mean of the two middle values for even counts
double median(std::vector<double> values);

SceneResult evaluate(const net::Model& model, const data::Scene& test_scene);

// external predictions keyed by frame id
SceneResult evaluate_predictions(const std::unordered_map<std::string, Pose>& predictions,
                                 const data::Scene& test_scene);

// prediction import format: one line per frame "frame_id x y z w p q r"
std::unordered_map<std::string, Pose> load_predictions(const std::string& file);

// unweighted arithmetic mean of per-scene medians -> (position m, orientation deg)
std::pair<double, double> average_over_scenes(const std::vector<SceneResult>& results);

void write_result_csv(const std::string& file, const SceneResult& r);
void write_result_json(const std::string& file, const SceneResult& r);

}  // namespace relpose::eval
