#include "relpose/tensor.hpp"

#include <cmath>
#include <unordered_set>

#include "relpose/errors.hpp"

namespace relpose::diff {

struct Tensor::Node {
    std::vector<std::size_t> shape;
    std::vector<double> data;
    std::vector<double> grad;  // allocated on first use
    bool requires_grad = false;
    std::vector<Tensor> parents;
    std::function<void(const std::vector<double>&, std::vector<Tensor>&)> backward;

    void ensure_grad() {
        if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
    }
};

namespace {

std::size_t shape_numel(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

void check_finite(const std::vector<double>& data, const char* op) {
    for (double v : data)
        if (!std::isfinite(v)) throw NonFiniteValue(op);
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape()) throw ShapeMismatch(op);
}

}  // namespace

Tensor make_op(std::vector<std::size_t> shape, std::vector<double> data,
               std::vector<Tensor> parents,
               std::function<void(const std::vector<double>&, std::vector<Tensor>&)> bw,
               const char* op_name) {
    check_finite(data, op_name);
    auto node = std::make_shared<Tensor::Node>();
    node->shape = std::move(shape);
    node->data = std::move(data);
    for (const auto& p : parents)
        if (p.requires_grad()) node->requires_grad = true;
    if (node->requires_grad) {
        node->parents = std::move(parents);
        node->backward = std::move(bw);
    }
    return Tensor(std::move(node));
}

std::vector<double>& grad_buffer(Tensor& t) {
    t.node_->ensure_grad();
    return t.node_->grad;
}

Tensor Tensor::zeros(std::vector<std::size_t> shape, bool requires_grad) {
    auto node = std::make_shared<Node>();
    node->data.assign(shape_numel(shape), 0.0);
    node->shape = std::move(shape);
    node->requires_grad = requires_grad;
    return Tensor(std::move(node));
}

Tensor Tensor::from_vector(std::vector<double> data, bool requires_grad) {
    check_finite(data, "from_vector");
    auto node = std::make_shared<Node>();
    node->shape = {data.size()};
    node->data = std::move(data);
    node->requires_grad = requires_grad;
    return Tensor(std::move(node));
}

Tensor Tensor::from_matrix(std::size_t rows, std::size_t cols, std::vector<double> data,
                           bool requires_grad) {
    if (data.size() != rows * cols) throw ShapeMismatch("from_matrix");
    check_finite(data, "from_matrix");
    auto node = std::make_shared<Node>();
    node->shape = {rows, cols};
    node->data = std::move(data);
    node->requires_grad = requires_grad;
    return Tensor(std::move(node));
}

Tensor Tensor::scalar(double v, bool requires_grad) {
    return from_vector({v}, requires_grad);
}

const std::vector<std::size_t>& Tensor::shape() const { return node_->shape; }
std::size_t Tensor::numel() const { return node_->data.size(); }
bool Tensor::requires_grad() const { return node_->requires_grad; }
const std::vector<double>& Tensor::values() const { return node_->data; }
std::vector<double>& Tensor::mutable_values() { return node_->data; }

const std::vector<double>& Tensor::grad() const {
    node_->ensure_grad();
    return node_->grad;
}

void Tensor::zero_grad() { node_->grad.assign(node_->data.size(), 0.0); }

double Tensor::value() const {
    if (numel() != 1) throw ShapeMismatch("value() on non-scalar");
    return node_->data[0];
}

void Tensor::backward() const {
    if (numel() != 1) throw NotScalarLoss();
    // iterative post-order DFS for reverse topological order
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, std::size_t>> stack{{node_.get(), 0}};
    visited.insert(node_.get());
    while (!stack.empty()) {
        auto& [n, idx] = stack.back();
        if (idx < n->parents.size()) {
            Node* p = n->parents[idx++].node_.get();
            if (p->requires_grad && !visited.count(p)) {
                visited.insert(p);
                stack.emplace_back(p, 0);
            }
        } else {
            order.push_back(n);
            stack.pop_back();
        }
    }
    node_->ensure_grad();
    node_->grad[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backward) n->backward(n->grad, n->parents);
    }
}

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    std::vector<double> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] + b.values()[i];
    return make_op(a.shape(), std::move(out), {a, b},
                   [](const std::vector<double>& g, std::vector<Tensor>& ps) {
                       for (auto& p : ps) {
                           if (!p.requires_grad()) continue;
                           auto& pg = grad_buffer(p);
                           for (std::size_t i = 0; i < g.size(); ++i) pg[i] += g[i];
                       }
                   },
                   "add");
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "sub");
    std::vector<double> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] - b.values()[i];
    return make_op(a.shape(), std::move(out), {a, b},
                   [](const std::vector<double>& g, std::vector<Tensor>& ps) {
                       if (ps[0].requires_grad()) {
                           auto& pg = grad_buffer(ps[0]);
                           for (std::size_t i = 0; i < g.size(); ++i) pg[i] += g[i];
                       }
                       if (ps[1].requires_grad()) {
                           auto& pg = grad_buffer(ps[1]);
                           for (std::size_t i = 0; i < g.size(); ++i) pg[i] -= g[i];
                       }
                   },
                   "sub");
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "mul");
    std::vector<double> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * b.values()[i];
    // parent values stay valid until the optimizer step, after backward
    return make_op(a.shape(), std::move(out), {a, b},
                   [](const std::vector<double>& g, std::vector<Tensor>& ps) {
                       const auto& av = ps[0].values();
                       const auto& bv = ps[1].values();
                       if (ps[0].requires_grad()) {
                           auto& pg = grad_buffer(ps[0]);
                           for (std::size_t i = 0; i < g.size(); ++i) pg[i] += g[i] * bv[i];
                       }
                       if (ps[1].requires_grad()) {
                           auto& pg = grad_buffer(ps[1]);
                           for (std::size_t i = 0; i < g.size(); ++i) pg[i] += g[i] * av[i];
                       }
                   },
                   "mul");
}

Tensor add_scalar(const Tensor& a, double s) {
    std::vector<double> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] + s;
    return make_op(a.shape(), std::move(out), {a},
                   [](const std::vector<double>& g, std::vector<Tensor>& ps) {
                       auto& pg = grad_buffer(ps[0]);
                       for (std::size_t i = 0; i < g.size(); ++i) pg[i] += g[i];
                   },
                   "add_scalar");
}

Tensor mul_scalar(const Tensor& a, double s) {
    std::vector<double> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * s;
    return make_op(a.shape(), std::move(out), {a},
                   [s](const std::vector<double>& g, std::vector<Tensor>& ps) {
                       auto& pg = grad_buffer(ps[0]);
                       for (std::size_t i = 0; i < g.size(); ++i) pg[i] += g[i] * s;
                   },
                   "mul_scalar");
}

Tensor matvec(const Tensor& w, const Tensor& x) {
    if (w.shape().size() != 2 || x.shape().size() != 1 || w.shape()[1] != x.shape()[0])
        throw ShapeMismatch("matvec");
    const std::size_t m = w.shape()[0], n = w.shape()[1];
    std::vector<double> out(m, 0.0);
    const auto& wv = w.values();
    const auto& xv = x.values();
    for (std::size_t i = 0; i < m; ++i) {
        double acc = 0.0;
        const double* row = wv.data() + i * n;
        for (std::size_t j = 0; j < n; ++j) acc += row[j] * xv[j];
        out[i] = acc;
    }
    return make_op({m}, std::move(out), {w, x},
                   [m, n](const std::vector<double>& g, std::vector<Tensor>& ps) {
                       if (ps[0].requires_grad()) {
                           const auto& xv2 = ps[1].values();
                           auto& wg = grad_buffer(ps[0]);
                           for (std::size_t i = 0; i < m; ++i)
                               for (std::size_t j = 0; j < n; ++j)
                                   wg[i * n + j] += g[i] * xv2[j];
                       }
                       if (ps[1].requires_grad()) {
                           const auto& wv2 = ps[0].values();
                           auto& xg = grad_buffer(ps[1]);
                           for (std::size_t i = 0; i < m; ++i)
                               for (std::size_t j = 0; j < n; ++j)
                                   xg[j] += g[i] * wv2[i * n + j];
                       }
                   },
                   "matvec");
}

Tensor concat(const Tensor& a, const Tensor& b) {
    if (a.shape().size() != 1 || b.shape().size() != 1) throw ShapeMismatch("concat");
    std::vector<double> out;
    out.reserve(a.numel() + b.numel());
    out.insert(out.end(), a.values().begin(), a.values().end());
    out.insert(out.end(), b.values().begin(), b.values().end());
    const std::size_t na = a.numel();
    return make_op({a.numel() + b.numel()}, std::move(out), {a, b},
                   [na](const std::vector<double>& g, std::vector<Tensor>& ps) {
                       if (ps[0].requires_grad()) {
                           auto& pg = grad_buffer(ps[0]);
                           for (std::size_t i = 0; i < na; ++i) pg[i] += g[i];
                       }
                       if (ps[1].requires_grad()) {
                           auto& pg = grad_buffer(ps[1]);
                           for (std::size_t i = na; i < g.size(); ++i) pg[i - na] += g[i];
                       }
                   },
                   "concat");
}

Tensor slice(const Tensor& a, std::size_t offset, std::size_t len) {
    if (a.shape().size() != 1 || offset + len > a.numel()) throw ShapeMismatch("slice");
    std::vector<double> out(a.values().begin() + offset, a.values().begin() + offset + len);
    return make_op({len}, std::move(out), {a},
                   [offset](const std::vector<double>& g, std::vector<Tensor>& ps) {
                       auto& pg = grad_buffer(ps[0]);
                       for (std::size_t i = 0; i < g.size(); ++i) pg[offset + i] += g[i];
                   },
                   "slice");
}

Tensor reciprocal(const Tensor& a) {
    std::vector<double> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = 1.0 / a.values()[i];
    auto outv = out;
    return make_op(a.shape(), std::move(out), {a},
                   [outv](const std::vector<double>& g, std::vector<Tensor>& ps) {
                       auto& pg = grad_buffer(ps[0]);
                       for (std::size_t i = 0; i < g.size(); ++i)
                           pg[i] -= g[i] * outv[i] * outv[i];
                   },
                   "reciprocal");
}

Tensor scale(const Tensor& a, const Tensor& s) {
    if (s.numel() != 1) throw ShapeMismatch("scale: s must be scalar");
    const double sv = s.values()[0];
    std::vector<double> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * sv;
    return make_op(a.shape(), std::move(out), {a, s},
                   [](const std::vector<double>& g, std::vector<Tensor>& ps) {
                       const auto& av = ps[0].values();
                       const double sv2 = ps[1].values()[0];
                       if (ps[0].requires_grad()) {
                           auto& pg = grad_buffer(ps[0]);
                           for (std::size_t i = 0; i < g.size(); ++i) pg[i] += g[i] * sv2;
                       }
                       if (ps[1].requires_grad()) {
                           auto& sg = grad_buffer(ps[1]);
                           for (std::size_t i = 0; i < g.size(); ++i) sg[0] += g[i] * av[i];
                       }
                   },
                   "scale");
}

Tensor relu(const Tensor& a) {
    std::vector<double> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] > 0.0 ? a.values()[i] : 0.0;
    auto av = a.values();
    return make_op(a.shape(), std::move(out), {a},
                   [av](const std::vector<double>& g, std::vector<Tensor>& ps) {
                       auto& pg = grad_buffer(ps[0]);
                       // subgradient 0 at the kink
                       for (std::size_t i = 0; i < g.size(); ++i)
                           if (av[i] > 0.0) pg[i] += g[i];
                   },
                   "relu");
}

Tensor sqrt(const Tensor& a) {
    std::vector<double> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::sqrt(a.values()[i]);
    auto outv = out;
    return make_op(a.shape(), std::move(out), {a},
                   [outv](const std::vector<double>& g, std::vector<Tensor>& ps) {
                       auto& pg = grad_buffer(ps[0]);
                       for (std::size_t i = 0; i < g.size(); ++i) pg[i] += g[i] * 0.5 / outv[i];
                   },
                   "sqrt");
}

Tensor exp(const Tensor& a) {
    std::vector<double> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::exp(a.values()[i]);
    auto outv = out;
    return make_op(a.shape(), std::move(out), {a},
                   [outv](const std::vector<double>& g, std::vector<Tensor>& ps) {
                       auto& pg = grad_buffer(ps[0]);
                       for (std::size_t i = 0; i < g.size(); ++i) pg[i] += g[i] * outv[i];
                   },
                   "exp");
}

Tensor square(const Tensor& a) {
    std::vector<double> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * a.values()[i];
    auto av = a.values();
    return make_op(a.shape(), std::move(out), {a},
                   [av](const std::vector<double>& g, std::vector<Tensor>& ps) {
                       auto& pg = grad_buffer(ps[0]);
                       for (std::size_t i = 0; i < g.size(); ++i) pg[i] += g[i] * 2.0 * av[i];
                   },
                   "square");
}

Tensor neg(const Tensor& a) { return mul_scalar(a, -1.0); }

Tensor sum(const Tensor& a) {
    double acc = 0.0;
    for (double v : a.values()) acc += v;
    return make_op({1}, {acc}, {a},
                   [](const std::vector<double>& g, std::vector<Tensor>& ps) {
                       auto& pg = grad_buffer(ps[0]);
                       for (auto& v : pg) v += g[0];
                   },
                   "sum");
}

Tensor mean(const Tensor& a) {
    double acc = 0.0;
    for (double v : a.values()) acc += v;
    const double inv = 1.0 / static_cast<double>(a.numel());
    return make_op({1}, {acc * inv}, {a},
                   [inv](const std::vector<double>& g, std::vector<Tensor>& ps) {
                       auto& pg = grad_buffer(ps[0]);
                       for (auto& v : pg) v += g[0] * inv;
                   },
                   "mean");
}

Tensor euclidean_norm(const Tensor& a) {
    double acc = 0.0;
    for (double v : a.values()) acc += v * v;
    const double n = std::sqrt(acc);
    auto av = a.values();
    return make_op({1}, {n}, {a},
                   [n, av](const std::vector<double>& g, std::vector<Tensor>& ps) {
                       if (n == 0.0) return;  // subgradient 0 at the origin
                       auto& pg = grad_buffer(ps[0]);
                       for (std::size_t i = 0; i < pg.size(); ++i) pg[i] += g[0] * av[i] / n;
                   },
                   "euclidean_norm");
}

GradcheckReport gradcheck(const std::function<Tensor(const Tensor&)>& f,
                          const std::vector<double>& point, double step, double tolerance) {
    Tensor leaf = Tensor::from_vector(point, true);
    Tensor out = f(leaf);
    out.backward();
    const std::vector<double> analytic = leaf.grad();

    GradcheckReport report;
    for (std::size_t i = 0; i < point.size(); ++i) {
        auto shifted = point;
        shifted[i] = point[i] + step;
        const double fp = f(Tensor::from_vector(shifted)).value();
        shifted[i] = point[i] - step;
        const double fm = f(Tensor::from_vector(shifted)).value();
        const double numeric = (fp - fm) / (2.0 * step);
        const double rel = std::abs(analytic[i] - numeric) / std::max(1.0, std::abs(numeric));
        report.max_rel_error = std::max(report.max_rel_error, rel);
    }
    report.passed = report.max_rel_error <= tolerance;
    return report;
}

}  // namespace relpose::diff
