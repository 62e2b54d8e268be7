#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "oracle.hpp"
#include "relpose/errors.hpp"
#include "relpose/pose.hpp"

using namespace relpose;

TEST_CASE("quat_normalize and norm") {
    Quaternion q{2.0, 0.0, 0.0, 0.0};
    CHECK(quat_norm(q) == doctest::Approx(2.0));
    auto u = quat_normalize(q);
    CHECK(u.w == doctest::Approx(1.0));
    CHECK(is_unit(u));
    CHECK_THROWS_AS(quat_normalize(Quaternion{0.0, 0.0, 0.0, 0.0}), ZeroNormQuaternion);
    CHECK_THROWS_AS(quat_normalize(Quaternion{1e-13, 0.0, 0.0, 0.0}), ZeroNormQuaternion);
}

TEST_CASE("hamilton product against the matrix oracle") {
    std::mt19937_64 gen(11);
    for (int i = 0; i < 200; ++i) {
        auto a = oracle::random_unit_quat(gen);
        auto b = oracle::random_unit_quat(gen);
        auto ab = quat_multiply(a, b);
        // R(a*b) must equal R(a) R(b)
        auto lhs = oracle::quat_to_mat(ab);
        auto rhs = oracle::matmul(oracle::quat_to_mat(a), oracle::quat_to_mat(b));
        CHECK(oracle::max_abs_diff(lhs, rhs) < 1e-12);
    }
}

TEST_CASE("hamilton product is non-commutative and unit-preserving") {
    Quaternion i{0, 1, 0, 0}, j{0, 0, 1, 0}, k{0, 0, 0, 1};
    auto ij = quat_multiply(i, j);
    CHECK(ij == k);
    auto ji = quat_multiply(j, i);
    CHECK(ji.z == doctest::Approx(-1.0));
    CHECK(is_unit(quat_multiply(i, j)));
}

TEST_CASE("conjugate inverts a unit quaternion") {
    std::mt19937_64 gen(5);
    auto q = oracle::random_unit_quat(gen);
    auto e = quat_multiply(q, quat_conjugate(q));
    CHECK(e.w == doctest::Approx(1.0));
    CHECK(std::abs(e.x) < 1e-12);
    CHECK(std::abs(e.y) < 1e-12);
    CHECK(std::abs(e.z) < 1e-12);
}

TEST_CASE("hemisphere canonicalization") {
    CHECK(canonicalize_hemisphere(Quaternion{-0.5, 0.5, 0.5, 0.5}).w == doctest::Approx(0.5));
    // w == 0 tie-break: first nonzero of (x, y, z) made positive
    auto a = canonicalize_hemisphere(Quaternion{0.0, -1.0, 0.0, 0.0});
    CHECK(a.x == doctest::Approx(1.0));
    auto b = canonicalize_hemisphere(Quaternion{0.0, 0.0, -0.6, 0.8});
    CHECK(b.y == doctest::Approx(0.6));
    CHECK(b.z == doctest::Approx(-0.8));
    // already canonical is untouched
    Quaternion c{0.0, 0.0, 0.6, -0.8};
    CHECK(canonicalize_hemisphere(c) == c);
    // q and -q map to the same representative
    std::mt19937_64 gen(17);
    for (int i = 0; i < 100; ++i) {
        auto q = oracle::random_unit_quat(gen);
        Quaternion neg{-q.w, -q.x, -q.y, -q.z};
        CHECK(canonicalize_hemisphere(q) == canonicalize_hemisphere(neg));
    }
}

TEST_CASE("relative pose against the rotation-matrix oracle") {
    std::mt19937_64 gen(23);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int i = 0; i < 1000; ++i) {
        Pose p{{u(gen), u(gen), u(gen)}, canonicalize_hemisphere(oracle::random_unit_quat(gen))};
        Pose ref{{u(gen), u(gen), u(gen)}, canonicalize_hemisphere(oracle::random_unit_quat(gen))};
        auto rel = relative_pose(p, ref);

        CHECK(rel.x_rel.px == doctest::Approx(p.position.px - ref.position.px).epsilon(1e-12));
        CHECK(rel.x_rel.py == doctest::Approx(p.position.py - ref.position.py).epsilon(1e-12));
        CHECK(rel.x_rel.pz == doctest::Approx(p.position.pz - ref.position.pz).epsilon(1e-12));

        // R(q_rel) must equal R(q_ref)^T R(q); canonicalization cannot change it
        auto expect = oracle::matmul(oracle::transpose(oracle::quat_to_mat(ref.orientation)),
                                     oracle::quat_to_mat(p.orientation));
        CHECK(oracle::max_abs_diff(oracle::quat_to_mat(rel.q_rel), expect) < 1e-9);
        CHECK(rel.q_rel.w >= 0.0);
        CHECK(is_unit(rel.q_rel));
    }
}

TEST_CASE("angular error against the rotation-angle oracle") {
    std::mt19937_64 gen(31);
    for (int i = 0; i < 500; ++i) {
        auto a = oracle::random_unit_quat(gen);
        auto b = oracle::random_unit_quat(gen);
        // the relative rotation's matrix angle is the geodesic distance
        auto rel = quat_multiply(quat_conjugate(a), b);
        const double expect = oracle::rotation_angle_deg(oracle::quat_to_mat(rel));
        CHECK(angular_error_deg(a, b) == doctest::Approx(expect).epsilon(1e-6));
    }
}

TEST_CASE("angular error fixed values") {
    Quaternion id{1, 0, 0, 0};
    CHECK(angular_error_deg(id, id) == doctest::Approx(0.0));
    // 90 deg about z: q = (cos45, 0, 0, sin45)
    const double s = std::sqrt(0.5);
    CHECK(angular_error_deg(id, Quaternion{s, 0, 0, s}) == doctest::Approx(90.0));
    CHECK(angular_error_deg(id, Quaternion{0, 0, 0, 1}) == doctest::Approx(180.0));
    // double cover: -q is the same rotation
    Quaternion q{s, 0, 0, s};
    CHECK(angular_error_deg(id, Quaternion{-s, 0, 0, -s}) ==
          doctest::Approx(angular_error_deg(id, q)));
    // dot slightly above 1 from rounding must clamp to 0, not NaN
    Quaternion almost{1.0 + 1e-15, 0, 0, 0};
    CHECK(angular_error_deg(id, almost) == doctest::Approx(0.0));
}

TEST_CASE("position error") {
    CHECK(position_error_m({0, 0, 0}, {3, 4, 0}) == doctest::Approx(5.0));
    CHECK(position_error_m({1, 2, 3}, {1, 2, 3}) == doctest::Approx(0.0));
}

TEST_CASE("relative pose identity and inverse consistency") {
    std::mt19937_64 gen(41);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    Pose p{{u(gen), u(gen), u(gen)}, canonicalize_hemisphere(oracle::random_unit_quat(gen))};
    auto self = relative_pose(p, p);
    CHECK(self.x_rel == Position{0, 0, 0});
    CHECK(self.q_rel.w == doctest::Approx(1.0));
    // swapping the arguments inverts the rotation: same angle either way
    Pose q{{u(gen), u(gen), u(gen)}, canonicalize_hemisphere(oracle::random_unit_quat(gen))};
    auto fwd = relative_pose(p, q);
    auto bwd = relative_pose(q, p);
    CHECK(angular_error_deg(fwd.q_rel, Quaternion{1, 0, 0, 0}) ==
          doctest::Approx(angular_error_deg(bwd.q_rel, Quaternion{1, 0, 0, 0})));
}
