#include "relpose/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <regex>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "relpose/errors.hpp"

namespace relpose::data {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<std::vector<std::size_t>> Scene::sequences() const {
    std::vector<std::vector<std::size_t>> out;
    std::unordered_map<std::string, std::size_t> seq_slot;
    for (std::size_t i = 0; i < frames.size(); ++i) {
        auto [it, inserted] = seq_slot.try_emplace(frames[i].sequence_id, out.size());
        if (inserted) out.emplace_back();
        out[it->second].push_back(i);
    }
    return out;
}

std::size_t Scene::index_of(const std::string& frame_id) const {
    for (std::size_t i = 0; i < frames.size(); ++i)
        if (frames[i].id == frame_id) return i;
    throw Error("unknown frame id: " + frame_id);
}

namespace {

Scene subset(const Scene& s, bool want_test, const char* split_name) {
    Scene out;
    out.name = s.name;
    out.split = split_name;
    std::unordered_map<std::size_t, std::size_t> remap;
    for (std::size_t i = 0; i < s.frames.size(); ++i) {
        if (s.frames[i].is_test == want_test) {
            remap[i] = out.frames.size();
            out.frames.push_back(s.frames[i]);
        }
    }
    for (auto [a, b] : s.aliased_pairs) {
        auto ia = remap.find(a);
        auto ib = remap.find(b);
        if (ia != remap.end() && ib != remap.end())
            out.aliased_pairs.emplace_back(ia->second, ib->second);
    }
    return out;
}

TrainingPairSpec make_pair(const Scene& scene, std::size_t cur, std::size_t ref) {
    TrainingPairSpec p;
    p.current = cur;
    p.reference = ref;
    p.current_frame_id = scene.frames[cur].id;
    p.reference_frame_id = scene.frames[ref].id;
    p.gt_rel = relative_pose(scene.frames[cur].pose, scene.frames[ref].pose);
    return p;
}

}  // namespace

Scene train_split(const Scene& s) { return subset(s, false, "train"); }
Scene test_split(const Scene& s) { return subset(s, true, "test"); }

std::vector<TrainingPairSpec> pair_next(const Scene& scene) {
    std::vector<TrainingPairSpec> pairs;
    for (const auto& seq : scene.sequences()) {
        if (seq.size() < 2)
            throw SequenceTooShort("sequence of " + std::to_string(seq.size()) +
                                   " frame(s) cannot be next-paired");
        for (std::size_t k = 0; k < seq.size(); ++k) {
            const std::size_t ref = (k + 1 < seq.size()) ? seq[k + 1] : seq[k - 1];
            pairs.push_back(make_pair(scene, seq[k], ref));
        }
    }
    return pairs;
}

namespace {

// fixed-point-free permutation of `ids` by rejection sampling
std::vector<std::size_t> derangement(const std::vector<std::size_t>& ids, std::mt19937_64& rng) {
    if (ids.size() < 2) throw Error("derangement needs at least 2 frames");
    std::vector<std::size_t> perm = ids;
    for (;;) {
        std::shuffle(perm.begin(), perm.end(), rng);
        bool ok = true;
        for (std::size_t i = 0; i < ids.size(); ++i)
            if (perm[i] == ids[i]) { ok = false; break; }
        if (ok) return perm;
    }
}

}  // namespace

std::vector<TrainingPairSpec> pair_random(const Scene& scene, std::uint64_t rng_seed,
                                          bool within_sequence_only) {
    std::mt19937_64 rng(rng_seed);
    std::vector<TrainingPairSpec> pairs;
    if (within_sequence_only) {
        for (const auto& seq : scene.sequences()) {
            auto perm = derangement(seq, rng);
            for (std::size_t k = 0; k < seq.size(); ++k)
                pairs.push_back(make_pair(scene, seq[k], perm[k]));
        }
    } else {
        std::vector<std::size_t> ids(scene.frames.size());
        for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
        auto perm = derangement(ids, rng);
        for (std::size_t i = 0; i < ids.size(); ++i)
            pairs.push_back(make_pair(scene, i, perm[i]));
    }
    return pairs;
}

// ---------------------------------------------------------------------------
// synthetic scenes

namespace {

Quaternion axis_angle_quat(double ax, double ay, double az, double angle) {
    const double n = std::sqrt(ax * ax + ay * ay + az * az);
    const double s = std::sin(angle / 2.0) / n;
    return canonicalize_hemisphere({std::cos(angle / 2.0), ax * s, ay * s, az * s});
}

}  // namespace

Scene generate_synth_scene(const SynthSceneConfig& cfg) {
    std::mt19937_64 rng(cfg.rng_seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    const std::size_t dim = cfg.descriptor_dim;
    // smooth pose -> descriptor map: random sinusoidal features over the
    // 7-vector (position scaled to the workspace, quaternion)
    std::vector<std::array<double, 3>> wp(dim);
    std::vector<std::array<double, 4>> wq(dim);
    std::vector<double> phase(dim);
    for (std::size_t j = 0; j < dim; ++j) {
        for (auto& v : wp[j]) v = normal(rng) * (1.2 / cfg.workspace_extent);
        for (auto& v : wq[j]) v = normal(rng) * 0.5;
        phase[j] = unit(rng) * 2.0 * 3.14159265358979323846;
    }
    auto descriptor_of = [&](const Pose& p) {
        std::vector<double> d(dim);
        for (std::size_t j = 0; j < dim; ++j) {
            double z = phase[j];
            z += wp[j][0] * p.position.px + wp[j][1] * p.position.py + wp[j][2] * p.position.pz;
            z += wq[j][0] * p.orientation.w + wq[j][1] * p.orientation.x +
                 wq[j][2] * p.orientation.y + wq[j][3] * p.orientation.z;
            d[j] = std::sin(z);
        }
        return d;
    };

    Scene scene;
    scene.name = "synth_seed" + std::to_string(cfg.rng_seed);
    const std::size_t test_period =
        cfg.test_fraction > 0.0
            ? std::max<std::size_t>(2, static_cast<std::size_t>(std::lround(1.0 / cfg.test_fraction)))
            : 0;

    const double two_pi = 2.0 * 3.14159265358979323846;
    for (std::size_t s = 0; s < cfg.num_sequences; ++s) {
        std::array<double, 3> center, amp, freq, ph;
        for (int a = 0; a < 3; ++a) {
            center[a] = (0.25 + 0.5 * unit(rng)) * cfg.workspace_extent;
            amp[a] = (0.10 + 0.25 * unit(rng)) * cfg.workspace_extent;
            freq[a] = two_pi * (0.5 + unit(rng)) / static_cast<double>(cfg.frames_per_sequence);
            ph[a] = unit(rng) * two_pi;
        }
        double axx = normal(rng), axy = normal(rng), axz = normal(rng);
        if (std::abs(axx) + std::abs(axy) + std::abs(axz) < 1e-6) axx = 1.0;
        const double theta0 = unit(rng) * two_pi;
        const double theta_amp = 0.3 + 0.9 * unit(rng);
        const double theta_freq = two_pi * (0.5 + unit(rng)) / static_cast<double>(cfg.frames_per_sequence);
        const double theta_ph = unit(rng) * two_pi;

        for (std::size_t i = 0; i < cfg.frames_per_sequence; ++i) {
            const double t = static_cast<double>(i);
            Frame fr;
            fr.sequence_id = "seq" + std::to_string(s);
            fr.id = fr.sequence_id + "_f" + std::to_string(i);
            fr.pose.position = {
                std::clamp(center[0] + amp[0] * std::sin(freq[0] * t + ph[0]), 0.0, cfg.workspace_extent),
                std::clamp(center[1] + amp[1] * std::sin(freq[1] * t + ph[1]), 0.0, cfg.workspace_extent),
                std::clamp(center[2] + amp[2] * std::sin(freq[2] * t + ph[2]), 0.0, cfg.workspace_extent)};
            fr.pose.orientation =
                axis_angle_quat(axx, axy, axz, theta0 + theta_amp * std::sin(theta_freq * t + theta_ph));
            fr.descriptor = descriptor_of(fr.pose);
            for (auto& v : fr.descriptor) v += normal(rng) * cfg.descriptor_noise_sigma;
            fr.is_test = test_period > 0 && (i % test_period) == test_period - 1;
            scene.frames.push_back(std::move(fr));
        }
    }

    if (cfg.aliasing_fraction > 0.0) {
        const std::size_t want =
            static_cast<std::size_t>(std::lround(cfg.aliasing_fraction * scene.frames.size()));
        std::vector<std::size_t> order(scene.frames.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::shuffle(order.begin(), order.end(), rng);
        std::vector<bool> used(scene.frames.size(), false);
        for (std::size_t src : order) {
            if (scene.aliased_pairs.size() >= want) break;
            if (used[src]) continue;
            std::vector<std::size_t> candidates;
            for (std::size_t j = 0; j < scene.frames.size(); ++j) {
                if (j == src || used[j]) continue;
                if (scene.frames[j].is_test != scene.frames[src].is_test) continue;
                if (position_error_m(scene.frames[j].pose.position,
                                     scene.frames[src].pose.position) >=
                    cfg.aliasing_pair_min_distance)
                    candidates.push_back(j);
            }
            if (candidates.empty()) continue;
            std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
            const std::size_t partner = candidates[pick(rng)];
            // near-duplicate descriptor, inside the 4-sigma bound. The
            // perturbation is a faint imprint of the partner's own clean
            // descriptor (scaled to norm 3*sigma, total pair distance about
            // 3.1*sigma), so the true location stays recoverable from subtle
            // cues, as with real perceptual aliasing.
            auto clean_src = descriptor_of(scene.frames[src].pose);
            auto clean_partner = descriptor_of(scene.frames[partner].pose);
            double delta_norm = 0.0;
            for (std::size_t k = 0; k < dim; ++k) {
                clean_partner[k] -= clean_src[k];
                delta_norm += clean_partner[k] * clean_partner[k];
            }
            delta_norm = std::sqrt(std::max(delta_norm, 1e-12));
            scene.frames[partner].descriptor = scene.frames[src].descriptor;
            for (std::size_t k = 0; k < dim; ++k)
                scene.frames[partner].descriptor[k] +=
                    clean_partner[k] / delta_norm * (3.0 * cfg.descriptor_noise_sigma) +
                    normal(rng) * (cfg.descriptor_noise_sigma / 8.0);
            used[src] = used[partner] = true;
            scene.aliased_pairs.emplace_back(src, partner);
        }
        if (scene.aliased_pairs.size() < want)
            throw InfeasibleAliasing(
                "only " + std::to_string(scene.aliased_pairs.size()) + " of " +
                std::to_string(want) + " aliased pairs satisfy the min-distance constraint");
    }
    return scene;
}

// ---------------------------------------------------------------------------
// rotation matrix conversions

Quaternion rotmat_to_quat(const std::array<double, 9>& r) {
    // Shepperd's method
    Quaternion q;
    const double trace = r[0] + r[4] + r[8];
    if (trace > 0.0) {
        double s = std::sqrt(trace + 1.0) * 2.0;
        q.w = 0.25 * s;
        q.x = (r[7] - r[5]) / s;
        q.y = (r[2] - r[6]) / s;
        q.z = (r[3] - r[1]) / s;
    } else if (r[0] > r[4] && r[0] > r[8]) {
        double s = std::sqrt(1.0 + r[0] - r[4] - r[8]) * 2.0;
        q.w = (r[7] - r[5]) / s;
        q.x = 0.25 * s;
        q.y = (r[1] + r[3]) / s;
        q.z = (r[2] + r[6]) / s;
    } else if (r[4] > r[8]) {
        double s = std::sqrt(1.0 + r[4] - r[0] - r[8]) * 2.0;
        q.w = (r[2] - r[6]) / s;
        q.x = (r[1] + r[3]) / s;
        q.y = 0.25 * s;
        q.z = (r[5] + r[7]) / s;
    } else {
        double s = std::sqrt(1.0 + r[8] - r[0] - r[4]) * 2.0;
        q.w = (r[3] - r[1]) / s;
        q.x = (r[2] + r[6]) / s;
        q.y = (r[5] + r[7]) / s;
        q.z = 0.25 * s;
    }
    return canonicalize_hemisphere(quat_normalize(q));
}

std::array<double, 9> quat_to_rotmat(const Quaternion& q) {
    const double w = q.w, x = q.x, y = q.y, z = q.z;
    return {1 - 2 * (y * y + z * z), 2 * (x * y - w * z),     2 * (x * z + w * y),
            2 * (x * y + w * z),     1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
            2 * (x * z - w * y),     2 * (y * z + w * x),     1 - 2 * (x * x + y * y)};
}

namespace {

double orthogonality_error(const std::array<double, 9>& r) {
    double err = 0.0;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            double dot = 0.0;
            for (int k = 0; k < 3; ++k) dot += r[k * 3 + i] * r[k * 3 + j];
            err = std::max(err, std::abs(dot - (i == j ? 1.0 : 0.0)));
        }
    }
    return err;
}

double det3(const std::array<double, 9>& r) {
    return r[0] * (r[4] * r[8] - r[5] * r[7]) - r[1] * (r[3] * r[8] - r[5] * r[6]) +
           r[2] * (r[3] * r[7] - r[4] * r[6]);
}

// Newton iteration toward the nearest rotation, valid for small deviations
std::array<double, 9> reorthonormalize(std::array<double, 9> r) {
    for (int iter = 0; iter < 5; ++iter) {
        std::array<double, 9> rtr{};
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                for (int k = 0; k < 3; ++k) rtr[i * 3 + j] += r[k * 3 + i] * r[k * 3 + j];
        std::array<double, 9> next{};
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double acc = 0.0;
                for (int k = 0; k < 3; ++k) acc += r[i * 3 + k] * rtr[k * 3 + j];
                next[i * 3 + j] = 1.5 * r[i * 3 + j] - 0.5 * acc;
            }
        r = next;
    }
    return r;
}

void read_descriptor_sidecar(const std::string& path, Scene& scene) {
    if (path.empty()) return;
    std::ifstream in(path);
    if (!in) throw Error("cannot open descriptor sidecar: " + path);
    std::string line;
    std::size_t idx = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (idx >= scene.frames.size())
            throw Error("descriptor sidecar has more lines than frames");
        std::istringstream ss(line);
        std::vector<double> d;
        double v;
        while (ss >> v) d.push_back(v);
        scene.frames[idx++].descriptor = std::move(d);
    }
    if (idx != scene.frames.size())
        throw Error("descriptor sidecar has fewer lines than frames");
}

}  // namespace

Scene load_7scenes_poses(const std::string& directory, const std::string& descriptor_sidecar) {
    static const std::regex pose_name(R"(frame-(\d{6})\.pose\.txt)");
    std::vector<std::pair<long, fs::path>> files;
    for (const auto& entry : fs::directory_iterator(directory)) {
        std::smatch m;
        const std::string name = entry.path().filename().string();
        if (std::regex_match(name, m, pose_name)) files.emplace_back(std::stol(m[1]), entry.path());
    }
    std::sort(files.begin(), files.end());

    Scene scene;
    scene.name = fs::path(directory).filename().string();
    for (const auto& [index, path] : files) {
        std::ifstream in(path);
        std::array<double, 16> mat;
        for (auto& v : mat) {
            if (!(in >> v)) throw MalformedPoseFile(path.string() + ": expected 16 reals");
            if (!std::isfinite(v)) throw MalformedPoseFile(path.string() + ": non-finite entry");
        }
        double extra;
        if (in >> extra) throw MalformedPoseFile(path.string() + ": more than 16 values");

        std::array<double, 9> r{mat[0], mat[1], mat[2], mat[4], mat[5], mat[6], mat[8], mat[9], mat[10]};
        const double err = orthogonality_error(r);
        if (err > 1e-3 || det3(r) <= 0.0)
            throw NonOrthogonalRotation(path.string() + ": deviation " + std::to_string(err));
        if (err > 1e-12) r = reorthonormalize(r);

        Frame fr;
        char id[32];
        std::snprintf(id, sizeof(id), "frame-%06ld", index);
        fr.id = id;
        fr.sequence_id = scene.name;
        fr.pose.position = {mat[3], mat[7], mat[11]};
        fr.pose.orientation = rotmat_to_quat(r);
        scene.frames.push_back(std::move(fr));
    }
    read_descriptor_sidecar(descriptor_sidecar, scene);
    return scene;
}

void write_7scenes_poses(const std::string& directory, const Scene& scene) {
    fs::create_directories(directory);
    for (std::size_t i = 0; i < scene.frames.size(); ++i) {
        const Frame& fr = scene.frames[i];
        char name[40];
        std::snprintf(name, sizeof(name), "frame-%06zu.pose.txt", i);
        std::ofstream out(fs::path(directory) / name);
        const auto r = quat_to_rotmat(fr.pose.orientation);
        const std::array<double, 3> t{fr.pose.position.px, fr.pose.position.py, fr.pose.position.pz};
        out.precision(17);
        for (int row = 0; row < 3; ++row)
            out << r[row * 3] << " " << r[row * 3 + 1] << " " << r[row * 3 + 2] << " " << t[row]
                << "\n";
        out << "0 0 0 1\n";
    }
}

Scene load_cambridge_poses(const std::string& file, const std::string& descriptor_sidecar) {
    std::ifstream in(file);
    if (!in) throw Error("cannot open: " + file);
    Scene scene;
    scene.name = fs::path(file).stem().string();
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ss(line);
        std::string path_token;
        if (!(ss >> path_token)) continue;
        // header lines do not start with a path token
        if (path_token.find('/') == std::string::npos) continue;
        std::array<double, 7> v;
        for (auto& x : v)
            if (!(ss >> x) || !std::isfinite(x))
                throw MalformedLine(line);
        double extra;
        if (ss >> extra) throw MalformedLine(line);

        Frame fr;
        fr.id = path_token;
        fr.sequence_id = path_token.substr(0, path_token.find('/'));
        fr.pose.position = {v[0], v[1], v[2]};
        // file order is W P Q R, i.e. (w, x, y, z)
        fr.pose.orientation = canonicalize_hemisphere(quat_normalize({v[3], v[4], v[5], v[6]}));
        scene.frames.push_back(std::move(fr));
    }
    read_descriptor_sidecar(descriptor_sidecar, scene);
    return scene;
}

void write_cambridge_poses(const std::string& file, const Scene& scene) {
    std::ofstream out(file);
    if (!out) throw Error("cannot write: " + file);
    out << "Visual Landmark Dataset\n";
    out << "ImageFile, Camera Position [X Y Z W P Q R]\n\n";
    out.precision(17);
    for (const Frame& fr : scene.frames) {
        const auto& p = fr.pose.position;
        const auto& q = fr.pose.orientation;
        out << fr.id << " " << p.px << " " << p.py << " " << p.pz << " " << q.w << " " << q.x
            << " " << q.y << " " << q.z << "\n";
    }
}

void write_scene_jsonl(const std::string& file, const Scene& scene) {
    std::ofstream out(file);
    if (!out) throw Error("cannot write: " + file);
    for (const Frame& fr : scene.frames) {
        json j{{"id", fr.id},
               {"sequence", fr.sequence_id},
               {"position", {fr.pose.position.px, fr.pose.position.py, fr.pose.position.pz}},
               {"quaternion",
                {fr.pose.orientation.w, fr.pose.orientation.x, fr.pose.orientation.y,
                 fr.pose.orientation.z}},
               {"descriptor", fr.descriptor},
               {"test", fr.is_test}};
        out << j.dump() << "\n";
    }
}

Scene load_scene_jsonl(const std::string& file) {
    std::ifstream in(file);
    if (!in) throw Error("cannot open: " + file);
    Scene scene;
    scene.name = fs::path(file).stem().string();
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) throw MalformedLine(line);
        Frame fr;
        fr.id = j.at("id").get<std::string>();
        fr.sequence_id = j.at("sequence").get<std::string>();
        auto p = j.at("position").get<std::vector<double>>();
        auto q = j.at("quaternion").get<std::vector<double>>();
        if (p.size() != 3 || q.size() != 4) throw MalformedLine(line);
        fr.pose.position = {p[0], p[1], p[2]};
        fr.pose.orientation = canonicalize_hemisphere(quat_normalize({q[0], q[1], q[2], q[3]}));
        fr.descriptor = j.at("descriptor").get<std::vector<double>>();
        fr.is_test = j.value("test", false);
        scene.frames.push_back(std::move(fr));
    }
    return scene;
}

PairSimilarityStats pair_similarity_stats(const Scene& scene,
                                          const std::vector<TrainingPairSpec>& pairs) {
    if (pairs.empty()) throw Error("pair_similarity_stats: no pairs");
    PairSimilarityStats stats;
    for (const auto& p : pairs) {
        const auto& a = scene.frames[p.current].descriptor;
        const auto& b = scene.frames[p.reference].descriptor;
        if (a.size() != b.size()) throw ShapeMismatch("descriptor lengths differ");
        double acc = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
        stats.per_pair_distances.push_back(std::sqrt(acc));
        stats.mean_descriptor_distance += stats.per_pair_distances.back();
    }
    stats.mean_descriptor_distance /= static_cast<double>(pairs.size());
    return stats;
}

}  // namespace relpose::data
