#include "relpose/pose.hpp"

#include <cmath>

#include "relpose/errors.hpp"

namespace relpose {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

double quat_norm(const Quaternion& q) {
    return std::sqrt(q.w * q.w + q.x * q.x + q.y * q.y + q.z * q.z);
}

double quat_dot(const Quaternion& a, const Quaternion& b) {
    return a.w * b.w + a.x * b.x + a.y * b.y + a.z * b.z;
}

Quaternion quat_normalize(const Quaternion& q) {
    const double n = quat_norm(q);
    if (n <= 1e-12) throw ZeroNormQuaternion();
    return {q.w / n, q.x / n, q.y / n, q.z / n};
}

Quaternion quat_conjugate(const Quaternion& q) {
    return {q.w, -q.x, -q.y, -q.z};
}

Quaternion quat_multiply(const Quaternion& a, const Quaternion& b) {
    return {
        a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
        a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
        a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
        a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
    };
}

Quaternion canonicalize_hemisphere(const Quaternion& q) {
    bool negate;
    if (q.w != 0.0) {
        negate = q.w < 0.0;
    } else if (q.x != 0.0) {
        negate = q.x < 0.0;
    } else if (q.y != 0.0) {
        negate = q.y < 0.0;
    } else {
        negate = q.z < 0.0;
    }
    if (!negate) return q;
    return {-q.w, -q.x, -q.y, -q.z};
}

bool is_unit(const Quaternion& q, double tol) {
    const double n2 = q.w * q.w + q.x * q.x + q.y * q.y + q.z * q.z;
    return std::abs(n2 - 1.0) <= tol;
}

RelativePose relative_pose(const Pose& p, const Pose& p_ref) {
    RelativePose rel;
    rel.x_rel = {p.position.px - p_ref.position.px,
                 p.position.py - p_ref.position.py,
                 p.position.pz - p_ref.position.pz};
    rel.q_rel = canonicalize_hemisphere(
        quat_multiply(quat_conjugate(p_ref.orientation), p.orientation));
    return rel;
}

double angular_error_deg(const Quaternion& q1, const Quaternion& q2) {
    const double d = std::min(1.0, std::abs(quat_dot(q1, q2)));
    return 2.0 * std::acos(d) * 180.0 / kPi;
}

double position_error_m(const Position& x1, const Position& x2) {
    const double dx = x1.px - x2.px;
    const double dy = x1.py - x2.py;
    const double dz = x1.pz - x2.pz;
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

}  // namespace relpose
