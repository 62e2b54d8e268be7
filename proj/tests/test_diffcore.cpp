#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "relpose/errors.hpp"
#include "relpose/tensor.hpp"

using namespace relpose;
using diff::Tensor;

TEST_CASE("factories and shapes") {
    auto z = Tensor::zeros({3});
    CHECK(z.shape() == std::vector<std::size_t>{3});
    CHECK(z.values() == std::vector<double>{0, 0, 0});
    auto m = Tensor::from_matrix(2, 3, {1, 2, 3, 4, 5, 6});
    CHECK(m.shape() == std::vector<std::size_t>{2, 3});
    CHECK(m.numel() == 6);
    auto s = Tensor::scalar(2.5);
    CHECK(s.value() == doctest::Approx(2.5));
}

TEST_CASE("elementwise forward values") {
    auto a = Tensor::from_vector({1, 2, 3});
    auto b = Tensor::from_vector({4, 5, 6});
    CHECK(diff::add(a, b).values() == std::vector<double>{5, 7, 9});
    CHECK(diff::sub(a, b).values() == std::vector<double>{-3, -3, -3});
    CHECK(diff::mul(a, b).values() == std::vector<double>{4, 10, 18});
    CHECK(diff::mul_scalar(a, 2).values() == std::vector<double>{2, 4, 6});
    CHECK(diff::add_scalar(a, 1).values() == std::vector<double>{2, 3, 4});
    CHECK(diff::relu(Tensor::from_vector({-1, 0, 2})).values() == std::vector<double>{0, 0, 2});
    CHECK(diff::neg(a).values() == std::vector<double>{-1, -2, -3});
    CHECK(diff::square(a).values() == std::vector<double>{1, 4, 9});
    CHECK_THROWS_AS(diff::add(a, Tensor::from_vector({1, 2})), ShapeMismatch);
}

TEST_CASE("matvec forward") {
    auto w = Tensor::from_matrix(2, 3, {1, 2, 3, 4, 5, 6});
    auto x = Tensor::from_vector({1, 1, 1});
    auto y = diff::matvec(w, x);
    CHECK(y.values() == std::vector<double>{6, 15});
    CHECK_THROWS_AS(diff::matvec(w, Tensor::from_vector({1, 1})), ShapeMismatch);
}

TEST_CASE("concat and slice") {
    auto a = Tensor::from_vector({1, 2});
    auto b = Tensor::from_vector({3, 4, 5});
    auto c = diff::concat(a, b);
    CHECK(c.values() == std::vector<double>{1, 2, 3, 4, 5});
    CHECK(diff::slice(c, 1, 3).values() == std::vector<double>{2, 3, 4});
}

TEST_CASE("reductions") {
    auto a = Tensor::from_vector({3, 4});
    CHECK(diff::sum(a).value() == doctest::Approx(7.0));
    CHECK(diff::mean(a).value() == doctest::Approx(3.5));
    CHECK(diff::euclidean_norm(a).value() == doctest::Approx(5.0));
}

TEST_CASE("backward of a simple chain, hand-derived") {
    // L = sum((a * a) + 2*a) with a = (1, 2): dL/da = 2a + 2 = (4, 6)
    auto a = Tensor::from_vector({1, 2}, true);
    auto l = diff::sum(diff::add(diff::mul(a, a), diff::mul_scalar(a, 2.0)));
    CHECK(l.value() == doctest::Approx(1 + 2 + 4 + 4));
    l.backward();
    CHECK(a.grad() == std::vector<double>{4, 6});
}

TEST_CASE("gradient accumulates across fan-out") {
    // L = sum(x + x): dL/dx = 2 per element
    auto x = Tensor::from_vector({1.0, -2.0, 3.0}, true);
    auto l = diff::sum(diff::add(x, x));
    l.backward();
    CHECK(x.grad() == std::vector<double>{2, 2, 2});
}

TEST_CASE("matvec backward, hand-derived") {
    // y = W x, L = sum(y). dL/dW = 1 x^T (outer), dL/dx = W^T 1 (column sums)
    auto w = Tensor::from_matrix(2, 2, {1, 2, 3, 4}, true);
    auto x = Tensor::from_vector({5, 6}, true);
    diff::sum(diff::matvec(w, x)).backward();
    CHECK(w.grad() == std::vector<double>{5, 6, 5, 6});
    CHECK(x.grad() == std::vector<double>{4, 6});
}

TEST_CASE("norm backward is the unit vector; subgradient zero at origin") {
    auto a = Tensor::from_vector({3, 4}, true);
    diff::euclidean_norm(a).backward();
    CHECK(a.grad()[0] == doctest::Approx(0.6));
    CHECK(a.grad()[1] == doctest::Approx(0.8));

    auto z = Tensor::from_vector({0, 0}, true);
    diff::euclidean_norm(z).backward();
    CHECK(z.grad() == std::vector<double>{0, 0});
}

TEST_CASE("relu subgradient is zero at the kink") {
    auto a = Tensor::from_vector({-1, 0, 2}, true);
    diff::sum(diff::relu(a)).backward();
    CHECK(a.grad() == std::vector<double>{0, 0, 1});
}

TEST_CASE("exp, sqrt, reciprocal, scale backward") {
    auto a = Tensor::from_vector({0.0, 1.0}, true);
    diff::sum(diff::exp(a)).backward();
    CHECK(a.grad()[0] == doctest::Approx(1.0));
    CHECK(a.grad()[1] == doctest::Approx(std::exp(1.0)));

    auto b = Tensor::from_vector({4.0}, true);
    diff::sum(diff::sqrt(b)).backward();
    CHECK(b.grad()[0] == doctest::Approx(0.25));  // 1/(2*sqrt(4))

    auto c = Tensor::from_vector({2.0}, true);
    diff::sum(diff::reciprocal(c)).backward();
    CHECK(c.grad()[0] == doctest::Approx(-0.25));  // -1/x^2

    auto d = Tensor::from_vector({1.0, 2.0}, true);
    auto s = Tensor::scalar(3.0, true);
    diff::sum(diff::scale(d, s)).backward();
    CHECK(d.grad() == std::vector<double>{3, 3});
    CHECK(s.grad()[0] == doctest::Approx(3.0));  // sum of d
}

TEST_CASE("backward demands a scalar") {
    auto a = Tensor::from_vector({1, 2}, true);
    CHECK_THROWS_AS(diff::add(a, a).backward(), NotScalarLoss);
}

TEST_CASE("linearity of the gradient") {
    // grad of c*L equals c * grad of L
    auto f = [](double c) {
        auto x = Tensor::from_vector({1.5, -0.5, 2.0}, true);
        auto l = diff::mul_scalar(diff::sum(diff::mul(x, x)), c);
        l.backward();
        return x.grad();
    };
    auto g1 = f(1.0), g3 = f(3.0);
    for (std::size_t i = 0; i < g1.size(); ++i) CHECK(g3[i] == doctest::Approx(3.0 * g1[i]));
}

TEST_CASE("non-finite forward values are rejected") {
    auto a = Tensor::from_vector({1e308});
    CHECK_THROWS_AS(diff::mul(a, a), NonFiniteValue);  // overflow to inf
    auto z = Tensor::from_vector({0.0});
    CHECK_THROWS_AS(diff::reciprocal(z), NonFiniteValue);
}

TEST_CASE("gradcheck harness accepts a correct gradient") {
    auto f = [](const Tensor& x) { return diff::sum(diff::mul(x, x)); };
    auto rep = diff::gradcheck(f, {0.3, -1.2, 2.5});
    CHECK(rep.passed);
    CHECK(rep.max_rel_error < 1e-5);
}

TEST_CASE("zero_grad resets accumulation between backward passes") {
    auto x = Tensor::from_vector({2.0}, true);
    diff::sum(diff::mul(x, x)).backward();
    CHECK(x.grad()[0] == doctest::Approx(4.0));
    x.zero_grad();
    diff::sum(diff::mul(x, x)).backward();
    CHECK(x.grad()[0] == doctest::Approx(4.0));
}
