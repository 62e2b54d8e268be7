#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

namespace relpose::diff {

// Dense double-precision tensor participating in reverse-mode differentiation.
// A Tensor is a cheap handle onto a graph node; the implicit DAG of parent
// links is the differentiation graph. Shapes are rank-1 vectors or rank-2
// row-major matrices; there is no broadcasting beyond scalar-tensor ops.
class Tensor {
  public:
    Tensor() = default;

    static Tensor zeros(std::vector<std::size_t> shape, bool requires_grad = false);
    static Tensor from_vector(std::vector<double> data, bool requires_grad = false);
    static Tensor from_matrix(std::size_t rows, std::size_t cols, std::vector<double> data,
                              bool requires_grad = false);
    static Tensor scalar(double v, bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    const std::vector<std::size_t>& shape() const;
    std::size_t numel() const;
    bool requires_grad() const;

    const std::vector<double>& values() const;
    std::vector<double>& mutable_values();  // parameter updates only

    const std::vector<double>& grad() const;
    void zero_grad();

    double value() const;  // scalar tensors

    // Gradient of a scalar loss w.r.t. every requires_grad node reachable from
    // it, accumulated (summed) across fan-out. Throws NotScalarLoss.
    void backward() const;

  private:
    struct Node;
    explicit Tensor(std::shared_ptr<Node> n) : node_(std::move(n)) {}
    std::shared_ptr<Node> node_;

    friend Tensor make_op(std::vector<std::size_t> shape, std::vector<double> data,
                          std::vector<Tensor> parents,
                          std::function<void(const std::vector<double>&, std::vector<Tensor>&)> bw,
                          const char* op_name);
    friend std::vector<double>& grad_buffer(Tensor& t);
};

// elementwise, same shape
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);

// scalar-tensor
Tensor add_scalar(const Tensor& a, double s);
Tensor mul_scalar(const Tensor& a, double s);

// (m x n) matrix times (n) vector -> (m)
Tensor matvec(const Tensor& w, const Tensor& x);

// rank-1 concatenation
Tensor concat(const Tensor& a, const Tensor& b);
// rank-1 slice [offset, offset+len)
Tensor slice(const Tensor& a, std::size_t offset, std::size_t len);

// elementwise 1/x
Tensor reciprocal(const Tensor& a);
// a scaled by a scalar tensor s (grads flow to both)
Tensor scale(const Tensor& a, const Tensor& s);

Tensor relu(const Tensor& a);
Tensor sqrt(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor square(const Tensor& a);
Tensor neg(const Tensor& a);

// reductions -> scalar
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
Tensor euclidean_norm(const Tensor& a);  // subgradient 0 at the origin

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator*(double s, const Tensor& a) { return mul_scalar(a, s); }
inline Tensor operator+(const Tensor& a, double s) { return add_scalar(a, s); }

struct GradcheckReport {
    double max_rel_error = 0.0;
    bool passed = false;
};

// Central finite differences against the analytic gradient for a scalar
// function of one rank-1 leaf. Relative error is |a - n| / max(1, |n|).
// The caller keeps `point` away from relu kinks and hinge boundaries.
GradcheckReport gradcheck(const std::function<Tensor(const Tensor&)>& f,
                          const std::vector<double>& point, double step = 1e-6,
                          double tolerance = 1e-5);

}  // namespace relpose::diff
