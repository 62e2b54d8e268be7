#include "relpose/gradcheck_suite.hpp"

#include <cmath>
#include <functional>
#include <random>

#include "relpose/losses.hpp"
#include "relpose/pose.hpp"
#include "relpose/tensor.hpp"

namespace relpose::loss {

namespace {

using diff::Tensor;

struct Rng {
    std::mt19937_64 gen;
    std::normal_distribution<double> normal{0.0, 1.0};
    std::uniform_real_distribution<double> uniform{-1.0, 1.0};

    double n() { return normal(gen); }
    double u() { return uniform(gen); }

    std::vector<double> vec(std::size_t n_, double scale = 1.0) {
        std::vector<double> out(n_);
        for (auto& v : out) v = normal(gen) * scale;
        return out;
    }

    Quaternion unit_quat() {
        for (;;) {
            Quaternion q{n(), n(), n(), n()};
            const double nn = quat_norm(q);
            if (nn > 1e-3) return canonicalize_hemisphere(quat_normalize(q));
        }
    }

    Pose pose() {
        return Pose{{2.0 * u(), 2.0 * u(), 2.0 * u()}, unit_quat()};
    }

    // raw quaternion safely away from the zero-norm singularity
    std::vector<double> raw_quat() {
        for (;;) {
            auto q = vec(4);
            const double nn = std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
            if (nn > 0.5 && nn < 3.0) return q;
        }
    }
};

std::vector<double> concat_vals(std::initializer_list<std::vector<double>> parts) {
    std::vector<double> out;
    for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
    return out;
}

SuiteEntry check_loss(const std::string& name, std::size_t points, double step, double tol,
                      const std::function<std::pair<std::function<Tensor(const Tensor&)>,
                                                    std::vector<double>>(std::size_t)>& make_case) {
    SuiteEntry entry{name, points, 0.0, true};
    for (std::size_t i = 0; i < points; ++i) {
        auto [f, point] = make_case(i);
        auto report = diff::gradcheck(f, point, step, tol);
        entry.max_rel_error = std::max(entry.max_rel_error, report.max_rel_error);
        if (!report.passed) entry.passed = false;
    }
    return entry;
}

constexpr std::size_t kFeatDim = 8;

}  // namespace

std::vector<SuiteEntry> run_gradcheck_suite(std::size_t points_per_loss, std::uint64_t seed,
                                            double step, double tolerance) {
    Rng rng{std::mt19937_64(seed)};
    std::vector<SuiteEntry> results;

    // GlobalLoss position + orientation, Eqs of the global pose objective
    results.push_back(check_loss(
        "global_loss", points_per_loss, step, tolerance, [&](std::size_t) {
            Pose gt = rng.pose();
            auto point = concat_vals({rng.vec(3), rng.raw_quat()});
            auto f = [gt](const Tensor& leaf) {
                auto [lx, lq] = global_loss(diff::slice(leaf, 0, 3), diff::slice(leaf, 3, 4), gt);
                return diff::add(lx, lq);
            };
            return std::make_pair(std::function<Tensor(const Tensor&)>(f), point);
        }));

    // learnable weighting: gradient w.r.t. predictions and s_x, s_q jointly
    results.push_back(check_loss(
        "weighted_global", points_per_loss, step, tolerance, [&](std::size_t) {
            Pose gt = rng.pose();
            auto point = concat_vals({rng.vec(3), rng.raw_quat(), {rng.u(), rng.u() - 2.0}});
            auto f = [gt](const Tensor& leaf) {
                auto [lx, lq] = global_loss(diff::slice(leaf, 0, 3), diff::slice(leaf, 3, 4), gt);
                LossWeights w{diff::slice(leaf, 7, 1), diff::slice(leaf, 8, 1), std::nullopt, 10.0};
                return weighted_global(lx, lq, w, WeightingMode::Learnable);
            };
            return std::make_pair(std::function<Tensor(const Tensor&)>(f), point);
        }));

    // RelLoss from two predicted global poses
    results.push_back(check_loss(
        "rel_consistency_loss", points_per_loss, step, tolerance, [&](std::size_t) {
            for (;;) {
                Pose a = rng.pose(), b = rng.pose();
                RelativePose gt_rel = relative_pose(a, b);
                auto point = concat_vals({rng.vec(3), rng.raw_quat(), rng.vec(3), rng.raw_quat()});
                // keep away from the double-cover tie (sign flip kink)
                Quaternion qa = quat_normalize({point[3], point[4], point[5], point[6]});
                Quaternion qb = quat_normalize({point[10], point[11], point[12], point[13]});
                Quaternion pred_rel = quat_multiply(quat_conjugate(qb), qa);
                if (std::abs(quat_dot(pred_rel, gt_rel.q_rel)) < 0.1) continue;
                auto f = [gt_rel](const Tensor& leaf) {
                    auto [lx, lq] = rel_consistency_loss(
                        diff::slice(leaf, 0, 3), diff::slice(leaf, 3, 4), diff::slice(leaf, 7, 3),
                        diff::slice(leaf, 10, 4), gt_rel);
                    return diff::add(lx, lq);
                };
                return std::make_pair(std::function<Tensor(const Tensor&)>(f), point);
            }
        }));

    // RelRLoss on the directly regressed relative pose
    results.push_back(check_loss(
        "rel_regression_loss", points_per_loss, step, tolerance, [&](std::size_t) {
            Pose a = rng.pose(), b = rng.pose();
            RelativePose gt_rel = relative_pose(a, b);
            auto point = concat_vals({rng.vec(3), rng.raw_quat()});
            auto f = [gt_rel](const Tensor& leaf) {
                auto [lx, lq] = rel_regression_loss(diff::slice(leaf, 0, 3),
                                                    diff::slice(leaf, 3, 4), gt_rel);
                return diff::add(lx, lq);
            };
            return std::make_pair(std::function<Tensor(const Tensor&)>(f), point);
        }));

    // adaptive metric distance loss, away from the hinge boundary
    results.push_back(check_loss(
        "metric_distance_loss", points_per_loss, step, tolerance, [&](std::size_t i) {
            for (;;) {
                Pose a = rng.pose(), b = rng.pose();
                const double alpha = 10.0;
                auto point = concat_vals({rng.vec(kFeatDim), rng.vec(kFeatDim)});
                double d2 = 0.0;
                for (std::size_t k = 0; k < kFeatDim; ++k) {
                    const double diff_k = point[k] - point[kFeatDim + k];
                    d2 += diff_k * diff_k;
                }
                const double d = std::sqrt(d2);
                Quaternion qa = canonicalize_hemisphere(a.orientation);
                Quaternion qb = canonicalize_hemisphere(b.orientation);
                const double d_q = std::sqrt(
                    (qa.w - qb.w) * (qa.w - qb.w) + (qa.x - qb.x) * (qa.x - qb.x) +
                    (qa.y - qb.y) * (qa.y - qb.y) + (qa.z - qb.z) * (qa.z - qb.z));
                const double margin = position_error_m(a.position, b.position) + alpha * d_q;
                if (std::abs(margin - d) < 0.05) continue;
                if (i % 2 == 0 && margin <= d) continue;  // force active hinge on even cases
                auto f = [a, b, alpha](const Tensor& leaf) {
                    PairForward p;
                    p.f = diff::slice(leaf, 0, kFeatDim);
                    p.f_ref = diff::slice(leaf, kFeatDim, kFeatDim);
                    p.gt = a;
                    p.gt_ref = b;
                    return metric_distance_loss({p}, alpha);
                };
                return std::make_pair(std::function<Tensor(const Tensor&)>(f), point);
            }
        }));

    // siamese baseline, margin 0.001; alternate active/inactive hinge
    results.push_back(check_loss(
        "siamese_loss", points_per_loss, step, tolerance, [&](std::size_t i) {
            const double m = 0.001;
            auto base = rng.vec(kFeatDim);
            auto dir = rng.vec(kFeatDim);
            double nn = 0.0;
            for (double v : dir) nn += v * v;
            nn = std::sqrt(nn);
            const double dist = (i % 2 == 0) ? 0.4 * m : 3.0 * m;
            auto ref = base;
            for (std::size_t k = 0; k < kFeatDim; ++k) ref[k] += dir[k] / nn * dist;
            auto point = concat_vals({base, ref});
            auto f = [m](const Tensor& leaf) {
                PairForward p;
                p.f = diff::slice(leaf, 0, kFeatDim);
                p.f_ref = diff::slice(leaf, kFeatDim, kFeatDim);
                return siamese_loss({p}, m);
            };
            return std::make_pair(std::function<Tensor(const Tensor&)>(f), point);
        }));

    // triplet baseline, margin 0.001
    results.push_back(check_loss(
        "triplet_loss", points_per_loss, step, tolerance, [&](std::size_t) {
            const double m = 0.001;
            for (;;) {
                auto point = concat_vals({rng.vec(6), rng.vec(6), rng.vec(6)});
                double d_ap = 0.0, d_an = 0.0;
                for (std::size_t k = 0; k < 6; ++k) {
                    d_ap += (point[k] - point[6 + k]) * (point[k] - point[6 + k]);
                    d_an += (point[k] - point[12 + k]) * (point[k] - point[12 + k]);
                }
                if (std::abs(d_ap - d_an + m) < 1e-3) continue;
                auto f = [m](const Tensor& leaf) {
                    TripletSample t{diff::slice(leaf, 0, 6), diff::slice(leaf, 6, 6),
                                    diff::slice(leaf, 12, 6)};
                    return triplet_loss({t}, m);
                };
                return std::make_pair(std::function<Tensor(const Tensor&)>(f), point);
            }
        }));

    // full comprehensive loss through every head and both weights
    results.push_back(check_loss(
        "comprehensive_full", points_per_loss, step, tolerance, [&](std::size_t) {
            for (;;) {
                Pose a = rng.pose(), b = rng.pose();
                RelativePose gt_rel = relative_pose(a, b);
                auto point = concat_vals({rng.vec(3), rng.raw_quat(), rng.vec(3), rng.raw_quat(),
                                          rng.vec(3), rng.raw_quat(), rng.vec(kFeatDim),
                                          rng.vec(kFeatDim), {rng.u(), rng.u() - 2.0}});
                // exclude the MD hinge boundary and the double-cover tie
                double d2 = 0.0;
                for (std::size_t k = 0; k < kFeatDim; ++k) {
                    const double dk = point[21 + k] - point[21 + kFeatDim + k];
                    d2 += dk * dk;
                }
                Quaternion qca = canonicalize_hemisphere(a.orientation);
                Quaternion qcb = canonicalize_hemisphere(b.orientation);
                const double d_q = std::sqrt(
                    (qca.w - qcb.w) * (qca.w - qcb.w) + (qca.x - qcb.x) * (qca.x - qcb.x) +
                    (qca.y - qcb.y) * (qca.y - qcb.y) + (qca.z - qcb.z) * (qca.z - qcb.z));
                const double margin = position_error_m(a.position, b.position) + 10.0 * d_q;
                if (std::abs(margin - std::sqrt(d2)) < 0.05) continue;
                Quaternion qa = quat_normalize({point[3], point[4], point[5], point[6]});
                Quaternion qb = quat_normalize({point[10], point[11], point[12], point[13]});
                if (std::abs(quat_dot(quat_multiply(quat_conjugate(qb), qa), gt_rel.q_rel)) < 0.1)
                    continue;
                auto f = [a, b, gt_rel](const Tensor& leaf) {
                    PairForward p;
                    p.x_hat = diff::slice(leaf, 0, 3);
                    p.q_hat_raw = diff::slice(leaf, 3, 4);
                    p.x_hat_ref = diff::slice(leaf, 7, 3);
                    p.q_hat_ref_raw = diff::slice(leaf, 10, 4);
                    p.x_rel_pred = diff::slice(leaf, 14, 3);
                    p.q_rel_pred_raw = diff::slice(leaf, 17, 4);
                    p.f = diff::slice(leaf, 21, kFeatDim);
                    p.f_ref = diff::slice(leaf, 21 + kFeatDim, kFeatDim);
                    p.gt = a;
                    p.gt_ref = b;
                    p.gt_rel = gt_rel;
                    LossWeights w{diff::slice(leaf, 21 + 2 * kFeatDim, 1),
                                  diff::slice(leaf, 22 + 2 * kFeatDim, 1), std::nullopt, 10.0};
                    ComprehensiveOptions opts;
                    opts.combination = Combination::Full;
                    return comprehensive_loss({p}, w, opts);
                };
                return std::make_pair(std::function<Tensor(const Tensor&)>(f), point);
            }
        }));

    return results;
}

}  // namespace relpose::loss
