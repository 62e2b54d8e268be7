#pragma once

#include <array>

namespace relpose {

// Component order is (w, x, y, z) everywhere, including file I/O.
struct Quaternion {
    double w = 1.0, x = 0.0, y = 0.0, z = 0.0;

    friend bool operator==(const Quaternion&, const Quaternion&) = default;
};

struct Position {
    double px = 0.0, py = 0.0, pz = 0.0;

    friend bool operator==(const Position&, const Position&) = default;
};

struct Pose {
    Position position;
    Quaternion orientation;  // unit, hemisphere-canonicalized

    friend bool operator==(const Pose&, const Pose&) = default;
};

struct RelativePose {
    Position x_rel;
    Quaternion q_rel;  // unit

    friend bool operator==(const RelativePose&, const RelativePose&) = default;
};

double quat_norm(const Quaternion& q);
double quat_dot(const Quaternion& a, const Quaternion& b);

// Throws ZeroNormQuaternion when the norm is <= 1e-12.
Quaternion quat_normalize(const Quaternion& q);

Quaternion quat_conjugate(const Quaternion& q);

// Hamilton product a*b.
Quaternion quat_multiply(const Quaternion& a, const Quaternion& b);

// Picks the w >= 0 representative of the double cover. At w == 0 the sign is
// chosen so the first nonzero component of (x, y, z) is positive.
Quaternion canonicalize_hemisphere(const Quaternion& q);

bool is_unit(const Quaternion& q, double tol = 1e-9);

// x_rel = x - x_ref (world-frame difference), q_rel = conj(q_ref) * q, canonicalized.
RelativePose relative_pose(const Pose& p, const Pose& p_ref);

// Geodesic angle 2*acos(|<q1,q2>|) in degrees, in [0, 180].
double angular_error_deg(const Quaternion& q1, const Quaternion& q2);

double position_error_m(const Position& x1, const Position& x2);

}  // namespace relpose
