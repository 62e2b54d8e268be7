#include "relpose/losses.hpp"

#include <cmath>

#include "relpose/errors.hpp"

namespace relpose::loss {

namespace {

using diff::add;
using diff::add_scalar;
using diff::concat;
using diff::euclidean_norm;
using diff::exp;
using diff::mul;
using diff::mul_scalar;
using diff::neg;
using diff::reciprocal;
using diff::relu;
using diff::scale;
using diff::slice;
using diff::square;
using diff::sub;
using diff::sum;

Tensor pos_const(const Position& p) {
    return Tensor::from_vector({p.px, p.py, p.pz});
}

Tensor quat_const(const Quaternion& q) {
    return Tensor::from_vector({q.w, q.x, q.y, q.z});
}

double raw_norm(const Tensor& q) {
    double acc = 0.0;
    for (double v : q.values()) acc += v * v;
    return std::sqrt(acc);
}

double dot4(const Tensor& a, const Quaternion& b) {
    const auto& v = a.values();
    return v[0] * b.w + v[1] * b.x + v[2] * b.y + v[3] * b.z;
}

}  // namespace

Tensor quat_normalize_t(const Tensor& q) {
    if (q.shape() != std::vector<std::size_t>{4}) throw ShapeMismatch("quat_normalize_t");
    if (raw_norm(q) <= 1e-12) throw ZeroNormQuaternion();
    return scale(q, reciprocal(euclidean_norm(q)));
}

Tensor quat_conjugate_t(const Tensor& q) {
    if (q.shape() != std::vector<std::size_t>{4}) throw ShapeMismatch("quat_conjugate_t");
    return mul(q, Tensor::from_vector({1.0, -1.0, -1.0, -1.0}));
}

Tensor quat_multiply_t(const Tensor& a, const Tensor& b) {
    if (a.shape() != std::vector<std::size_t>{4} || b.shape() != std::vector<std::size_t>{4})
        throw ShapeMismatch("quat_multiply_t");
    Tensor aw = slice(a, 0, 1), ax = slice(a, 1, 1), ay = slice(a, 2, 1), az = slice(a, 3, 1);
    Tensor bw = slice(b, 0, 1), bx = slice(b, 1, 1), by = slice(b, 2, 1), bz = slice(b, 3, 1);
    Tensor w = sub(sub(sub(mul(aw, bw), mul(ax, bx)), mul(ay, by)), mul(az, bz));
    Tensor x = sub(add(add(mul(aw, bx), mul(ax, bw)), mul(ay, bz)), mul(az, by));
    Tensor y = add(add(sub(mul(aw, by), mul(ax, bz)), mul(ay, bw)), mul(az, bx));
    Tensor z = add(add(sub(mul(aw, bz), mul(ay, bx)), mul(ax, by)), mul(az, bw));
    return concat(concat(w, x), concat(y, z));
}

std::pair<Tensor, Tensor> global_loss(const Tensor& x_hat, const Tensor& q_hat_raw,
                                      const Pose& gt) {
    Tensor l_x = euclidean_norm(sub(pos_const(gt.position), x_hat));
    Tensor l_q = euclidean_norm(sub(quat_const(gt.orientation), quat_normalize_t(q_hat_raw)));
    return {l_x, l_q};
}

Tensor weighted_global(const Tensor& l_x, const Tensor& l_q, const LossWeights& w,
                       WeightingMode mode) {
    if (mode == WeightingMode::FixedBeta) {
        if (!w.beta) throw Error("fixed-beta weighting requires beta");
        return add(l_x, mul_scalar(l_q, *w.beta));
    }
    Tensor tx = add(mul(l_x, exp(neg(w.s_x))), w.s_x);
    Tensor tq = add(mul(l_q, exp(neg(w.s_q))), w.s_q);
    return add(tx, tq);
}

std::pair<Tensor, Tensor> rel_consistency_loss(const Tensor& x_hat, const Tensor& q_hat_raw,
                                               const Tensor& x_hat_ref,
                                               const Tensor& q_hat_ref_raw,
                                               const RelativePose& gt_rel) {
    Tensor x_rel_pred = sub(x_hat, x_hat_ref);
    Tensor l_x = euclidean_norm(sub(x_rel_pred, pos_const(gt_rel.x_rel)));

    Tensor q_rel_pred =
        quat_multiply_t(quat_conjugate_t(quat_normalize_t(q_hat_ref_raw)),
                        quat_normalize_t(q_hat_raw));
    // gt_rel.q_rel is hemisphere-canonicalized while the derived prediction is
    // not; compare against the double-cover representative nearest to it.
    Quaternion target = gt_rel.q_rel;
    if (dot4(q_rel_pred, target) < 0.0)
        target = {-target.w, -target.x, -target.y, -target.z};
    Tensor l_q = euclidean_norm(sub(q_rel_pred, quat_const(target)));
    return {l_x, l_q};
}

std::pair<Tensor, Tensor> rel_regression_loss(const Tensor& x_rel_pred,
                                              const Tensor& q_rel_pred_raw,
                                              const RelativePose& gt_rel) {
    Tensor l_x = euclidean_norm(sub(pos_const(gt_rel.x_rel), x_rel_pred));
    Tensor l_q =
        euclidean_norm(sub(quat_const(gt_rel.q_rel), quat_normalize_t(q_rel_pred_raw)));
    return {l_x, l_q};
}

Tensor metric_distance_loss(const std::vector<PairForward>& batch, double alpha) {
    if (batch.empty()) throw Error("metric_distance_loss: empty batch");
    Tensor acc;
    for (const auto& p : batch) {
        const double d_x = position_error_m(p.gt.position, p.gt_ref.position);
        const Quaternion qa = canonicalize_hemisphere(p.gt.orientation);
        const Quaternion qb = canonicalize_hemisphere(p.gt_ref.orientation);
        const double d_q = std::sqrt((qa.w - qb.w) * (qa.w - qb.w) + (qa.x - qb.x) * (qa.x - qb.x) +
                                     (qa.y - qb.y) * (qa.y - qb.y) + (qa.z - qb.z) * (qa.z - qb.z));
        Tensor d = euclidean_norm(sub(p.f, p.f_ref));
        Tensor slack = relu(add_scalar(neg(d), d_x + alpha * d_q));
        Tensor term = square(slack);
        acc = acc.defined() ? add(acc, term) : term;
    }
    return mul_scalar(acc, 0.5 / static_cast<double>(batch.size()));
}

Tensor siamese_loss(const std::vector<PairForward>& batch, double margin) {
    if (batch.empty()) throw Error("siamese_loss: empty batch");
    Tensor acc;
    for (const auto& p : batch) {
        Tensor d = euclidean_norm(sub(p.f, p.f_ref));
        Tensor term = square(relu(add_scalar(neg(d), margin)));
        acc = acc.defined() ? add(acc, term) : term;
    }
    return mul_scalar(acc, 0.5 / static_cast<double>(batch.size()));
}

Tensor triplet_loss(const std::vector<TripletSample>& batch, double margin) {
    if (batch.empty()) throw Error("triplet_loss: empty batch");
    Tensor acc;
    for (const auto& t : batch) {
        Tensor d_ap = sum(square(sub(t.f_anchor, t.f_positive)));
        Tensor d_an = sum(square(sub(t.f_anchor, t.f_negative)));
        Tensor term = relu(add_scalar(sub(d_ap, d_an), margin));
        acc = acc.defined() ? add(acc, term) : term;
    }
    return acc;
}

Combination combination_from_string(const std::string& s) {
    if (s == "G") return Combination::G;
    if (s == "G+C") return Combination::GC;
    if (s == "G+C+R") return Combination::GCR;
    if (s == "G+M") return Combination::GM;
    if (s == "G+R") return Combination::GR;
    if (s == "full") return Combination::Full;
    if (s == "siamese") return Combination::SiameseVariant;
    if (s == "triplet") return Combination::TripletVariant;
    throw Error("unknown loss combination: " + s);
}

std::string to_string(Combination c) {
    switch (c) {
        case Combination::G: return "G";
        case Combination::GC: return "G+C";
        case Combination::GCR: return "G+C+R";
        case Combination::GM: return "G+M";
        case Combination::GR: return "G+R";
        case Combination::Full: return "full";
        case Combination::SiameseVariant: return "siamese";
        case Combination::TripletVariant: return "triplet";
    }
    throw Error("unknown combination enum");
}

bool needs_rpru(Combination c) {
    switch (c) {
        case Combination::GCR:
        case Combination::GR:
        case Combination::Full:
        case Combination::SiameseVariant:
        case Combination::TripletVariant:
            return true;
        default:
            return false;
    }
}

Tensor comprehensive_loss(const std::vector<PairForward>& batch, const LossWeights& w,
                          const ComprehensiveOptions& opts) {
    if (batch.empty()) throw Error("comprehensive_loss: empty batch");
    const Combination c = opts.combination;
    const bool use_c = c == Combination::GC || c == Combination::GCR || c == Combination::Full ||
                       c == Combination::SiameseVariant || c == Combination::TripletVariant;
    const bool use_r = needs_rpru(c);
    const bool use_m = c == Combination::GM || c == Combination::Full;

    Tensor lx_acc, lq_acc;
    auto accumulate = [](Tensor& acc, const Tensor& t) {
        acc = acc.defined() ? add(acc, t) : t;
    };

    std::vector<TripletSample> triplets;
    for (const auto& p : batch) {
        auto [gx, gq] = global_loss(p.x_hat, p.q_hat_raw, p.gt);
        if (opts.global_both_frames) {
            auto [gx_ref, gq_ref] = global_loss(p.x_hat_ref, p.q_hat_ref_raw, p.gt_ref);
            gx = mul_scalar(add(gx, gx_ref), 0.5);
            gq = mul_scalar(add(gq, gq_ref), 0.5);
        }
        accumulate(lx_acc, gx);
        accumulate(lq_acc, gq);

        if (use_c) {
            auto [cx, cq] = rel_consistency_loss(p.x_hat, p.q_hat_raw, p.x_hat_ref,
                                                 p.q_hat_ref_raw, p.gt_rel);
            accumulate(lx_acc, cx);
            accumulate(lq_acc, cq);
        }
        if (use_r) {
            if (!p.x_rel_pred.defined() || !p.q_rel_pred_raw.defined())
                throw MissingHead("combination " + to_string(c) + " needs RPRU outputs");
            auto [rx, rq] = rel_regression_loss(p.x_rel_pred, p.q_rel_pred_raw, p.gt_rel);
            accumulate(lx_acc, rx);
            accumulate(lq_acc, rq);
        }
        if (c == Combination::TripletVariant) {
            if (!p.f_neg.defined())
                throw Error("triplet combination needs a negative feature per pair");
            triplets.push_back({p.f, p.f_ref, p.f_neg});
        }
    }

    const double inv_n = 1.0 / static_cast<double>(batch.size());
    Tensor total = weighted_global(mul_scalar(lx_acc, inv_n), mul_scalar(lq_acc, inv_n), w,
                                   WeightingMode::Learnable);
    if (use_m) total = add(total, metric_distance_loss(batch, w.alpha));
    if (c == Combination::SiameseVariant)
        total = add(total, siamese_loss(batch, opts.siamese_margin));
    if (c == Combination::TripletVariant)
        total = add(total, triplet_loss(triplets, opts.triplet_margin));
    return total;
}

}  // namespace relpose::loss
