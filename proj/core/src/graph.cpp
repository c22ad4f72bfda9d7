#include "rwae/graph.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <unordered_set>

namespace rwae {

namespace {

std::string shape_str(const Matrix& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

[[noreturn]] void shape_fail(const char* op, const Matrix& a, const Matrix& b) {
    throw std::invalid_argument(std::string(op) + ": incompatible shapes " + shape_str(a) +
                                " and " + shape_str(b));
}

Var make(Matrix value, std::vector<Var> parents,
         std::function<std::vector<Var>(const Var&, const Var&)> bwd) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->parents = std::move(parents);
    for (const Var& p : n->parents) {
        if (p.requires_grad()) {
            n->requires_grad = true;
            break;
        }
    }
    if (n->requires_grad) n->backward = std::move(bwd);
    return Var(std::move(n));
}

// Broadcast b to the shape of `a` for elementwise combination.
Matrix broadcast_to(const Matrix& b, Eigen::Index r, Eigen::Index c, const char* op) {
    if (b.rows() == r && b.cols() == c) return b;
    if (b.rows() == 1 && b.cols() == 1) return Matrix::Constant(r, c, b(0, 0));
    if (b.rows() == 1 && b.cols() == c) return b.replicate(r, 1);
    if (b.cols() == 1 && b.rows() == r) return b.replicate(1, c);
    throw std::invalid_argument(std::string(op) + ": cannot broadcast " + shape_str(b));
}

bool broadcastable(const Matrix& a, const Matrix& b) {
    if (a.rows() == b.rows() && a.cols() == b.cols()) return true;
    auto is_sub = [](const Matrix& s, const Matrix& f) {
        return (s.rows() == 1 && s.cols() == 1) || (s.rows() == 1 && s.cols() == f.cols()) ||
               (s.cols() == 1 && s.rows() == f.rows());
    };
    return is_sub(a, b) || is_sub(b, a);
}

// Output shape of a broadcast combination.
std::pair<Eigen::Index, Eigen::Index> out_shape(const Matrix& a, const Matrix& b) {
    return {std::max(a.rows(), b.rows()), std::max(a.cols(), b.cols())};
}

// Reduces a full-shape gradient back down to the shape of the broadcast operand.
Var reduce_to(const Var& g, Eigen::Index r, Eigen::Index c) {
    Var out = g;
    if (out.rows() != r) {
        if (r != 1) throw std::logic_error("reduce_to: bad target rows");
        out = colwise_sum(out);
    }
    if (out.cols() != c) {
        if (c != 1) throw std::logic_error("reduce_to: bad target cols");
        out = rowwise_sum(out);
    }
    return out;
}

} // namespace

Var Var::constant(Matrix m) {
    auto n = std::make_shared<Node>();
    n->value = std::move(m);
    return Var(std::move(n));
}

Var Var::scalar(double v) { return constant(Matrix::Constant(1, 1, v)); }

Var Var::param(Matrix m) {
    auto n = std::make_shared<Node>();
    n->value = std::move(m);
    n->requires_grad = true;
    return Var(std::move(n));
}

double Var::item() const {
    if (rows() != 1 || cols() != 1) {
        throw std::invalid_argument("Var::item: node is " + shape_str(node_->value) + ", not 1x1");
    }
    return node_->value(0, 0);
}

// --- elementwise binary ops --------------------------------------------------

namespace {

template <typename F>
Var elementwise2(const char* name, const Var& a, const Var& b, F&& combine,
                 std::function<std::vector<Var>(const Var&, const Var&)> bwd) {
    if (!broadcastable(a.value(), b.value())) shape_fail(name, a.value(), b.value());
    auto [r, c] = out_shape(a.value(), b.value());
    Matrix av = broadcast_to(a.value(), r, c, name);
    Matrix bv = broadcast_to(b.value(), r, c, name);
    return make(combine(av, bv), {a, b}, std::move(bwd));
}

} // namespace

Var add(const Var& a, const Var& b) {
    return elementwise2(
        "add", a, b, [](const Matrix& x, const Matrix& y) -> Matrix { return x + y; },
        [](const Var& self, const Var& g) -> std::vector<Var> {
            const Var& a = self.parent(0);
            const Var& b = self.parent(1);
            return {reduce_to(g, a.rows(), a.cols()), reduce_to(g, b.rows(), b.cols())};
        });
}

Var sub(const Var& a, const Var& b) {
    return elementwise2(
        "sub", a, b, [](const Matrix& x, const Matrix& y) -> Matrix { return x - y; },
        [](const Var& self, const Var& g) -> std::vector<Var> {
            const Var& a = self.parent(0);
            const Var& b = self.parent(1);
            return {reduce_to(g, a.rows(), a.cols()), reduce_to(neg(g), b.rows(), b.cols())};
        });
}

Var mul(const Var& a, const Var& b) {
    return elementwise2(
        "mul", a, b,
        [](const Matrix& x, const Matrix& y) -> Matrix { return x.cwiseProduct(y); },
        [](const Var& self, const Var& g) -> std::vector<Var> {
            const Var& a = self.parent(0);
            const Var& b = self.parent(1);
            return {reduce_to(mul(g, b), a.rows(), a.cols()),
                    reduce_to(mul(g, a), b.rows(), b.cols())};
        });
}

Var div(const Var& a, const Var& b) {
    return elementwise2(
        "div", a, b,
        [](const Matrix& x, const Matrix& y) -> Matrix { return x.cwiseQuotient(y); },
        [](const Var& self, const Var& g) -> std::vector<Var> {
            const Var& a = self.parent(0);
            const Var& b = self.parent(1);
            Var ga = reduce_to(div(g, b), a.rows(), a.cols());
            Var gb = reduce_to(neg(div(mul(g, a), square(b))), b.rows(), b.cols());
            return {ga, gb};
        });
}

Var add(const Var& a, double b) { return add(a, Var::scalar(b)); }
Var sub(double a, const Var& b) { return sub(Var::scalar(a), b); }
Var mul(const Var& a, double b) { return mul(a, Var::scalar(b)); }

Var neg(const Var& a) {
    return make(-a.value(), {a}, [](const Var&, const Var& g) -> std::vector<Var> {
        return {neg(g)};
    });
}

Var matmul(const Var& a, const Var& b) {
    if (a.cols() != b.rows()) shape_fail("matmul", a.value(), b.value());
    return make(a.value() * b.value(), {a, b},
                [](const Var& self, const Var& g) -> std::vector<Var> {
                    return {matmul(g, transpose(self.parent(1))),
                            matmul(transpose(self.parent(0)), g)};
                });
}

Var transpose(const Var& a) {
    return make(a.value().transpose(), {a}, [](const Var&, const Var& g) -> std::vector<Var> {
        return {transpose(g)};
    });
}

// --- elementwise unary ops ---------------------------------------------------

Var tanh(const Var& a) {
    return make(a.value().array().tanh().matrix(), {a},
                [](const Var& self, const Var& g) -> std::vector<Var> {
                    return {mul(g, sub(1.0, square(self)))};
                });
}

Var sigmoid(const Var& a) {
    Matrix v = (1.0 / (1.0 + (-a.value().array()).exp())).matrix();
    return make(std::move(v), {a}, [](const Var& self, const Var& g) -> std::vector<Var> {
        return {mul(g, mul(self, sub(1.0, self)))};
    });
}

Var exp(const Var& a) {
    return make(a.value().array().exp().matrix(), {a},
                [](const Var& self, const Var& g) -> std::vector<Var> {
                    return {mul(g, self)};
                });
}

Var log(const Var& a) {
    return make(a.value().array().log().matrix(), {a},
                [](const Var& self, const Var& g) -> std::vector<Var> {
                    return {div(g, self.parent(0))};
                });
}

Var sqrt(const Var& a) {
    return make(a.value().array().sqrt().matrix(), {a},
                [](const Var& self, const Var& g) -> std::vector<Var> {
                    return {div(mul(g, 0.5), self)};
                });
}

Var square(const Var& a) {
    return make(a.value().array().square().matrix(), {a},
                [](const Var& self, const Var& g) -> std::vector<Var> {
                    return {mul(g, mul(self.parent(0), 2.0))};
                });
}

Var relu(const Var& a) {
    return make(a.value().cwiseMax(0.0), {a},
                [](const Var& self, const Var& g) -> std::vector<Var> {
                    Matrix mask = self.parent(0).value().unaryExpr(
                        [](double v) { return v > 0.0 ? 1.0 : 0.0; });
                    return {mul(g, Var::constant(std::move(mask)))};
                });
}

Var leaky_relu(const Var& a, double slope) {
    Matrix v = a.value().unaryExpr([slope](double x) { return x > 0.0 ? x : slope * x; });
    return make(std::move(v), {a}, [slope](const Var& self, const Var& g) -> std::vector<Var> {
        Matrix mask = self.parent(0).value().unaryExpr(
            [slope](double x) { return x > 0.0 ? 1.0 : slope; });
        return {mul(g, Var::constant(std::move(mask)))};
    });
}

Var clamp(const Var& a, double lo, double hi) {
    if (!(lo <= hi)) throw std::invalid_argument("clamp: lo must be <= hi");
    return make(a.value().cwiseMax(lo).cwiseMin(hi), {a},
                [lo, hi](const Var& self, const Var& g) -> std::vector<Var> {
                    Matrix mask = self.parent(0).value().unaryExpr(
                        [lo, hi](double v) { return (v >= lo && v <= hi) ? 1.0 : 0.0; });
                    return {mul(g, Var::constant(std::move(mask)))};
                });
}

// --- reductions ---------------------------------------------------------------

Var sum_all(const Var& a) {
    return make(Matrix::Constant(1, 1, a.value().sum()), {a},
                [](const Var& self, const Var& g) -> std::vector<Var> {
                    const Var& a = self.parent(0);
                    return {mul(Var::constant(Matrix::Ones(a.rows(), a.cols())), g)};
                });
}

Var mean_all(const Var& a) {
    const double n = static_cast<double>(a.rows() * a.cols());
    return make(Matrix::Constant(1, 1, a.value().sum() / n), {a},
                [n](const Var& self, const Var& g) -> std::vector<Var> {
                    const Var& a = self.parent(0);
                    return {mul(Var::constant(Matrix::Constant(a.rows(), a.cols(), 1.0 / n)), g)};
                });
}

Var colwise_sum(const Var& a) {
    return make(a.value().colwise().sum(), {a},
                [](const Var& self, const Var& g) -> std::vector<Var> {
                    const Var& a = self.parent(0);
                    return {mul(Var::constant(Matrix::Ones(a.rows(), a.cols())), g)};
                });
}

Var rowwise_sum(const Var& a) {
    return make(a.value().rowwise().sum(), {a},
                [](const Var& self, const Var& g) -> std::vector<Var> {
                    const Var& a = self.parent(0);
                    return {mul(Var::constant(Matrix::Ones(a.rows(), a.cols())), g)};
                });
}

Var diag_sum(const Var& a) {
    if (a.rows() != a.cols()) {
        throw std::invalid_argument("diag_sum: matrix must be square, got " +
                                    shape_str(a.value()));
    }
    return make(Matrix::Constant(1, 1, a.value().trace()), {a},
                [](const Var& self, const Var& g) -> std::vector<Var> {
                    const Var& a = self.parent(0);
                    return {mul(Var::constant(Matrix::Identity(a.rows(), a.cols())), g)};
                });
}

// --- structure ops -------------------------------------------------------------

Var concat_cols(const std::vector<Var>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
    const Eigen::Index r = parts[0].rows();
    Eigen::Index c = 0;
    for (const Var& p : parts) {
        if (p.rows() != r) shape_fail("concat_cols", parts[0].value(), p.value());
        c += p.cols();
    }
    Matrix v(r, c);
    Eigen::Index at = 0;
    for (const Var& p : parts) {
        v.middleCols(at, p.cols()) = p.value();
        at += p.cols();
    }
    return make(std::move(v), parts, [](const Var& self, const Var& g) -> std::vector<Var> {
        std::vector<Var> grads;
        Eigen::Index at = 0;
        for (std::size_t i = 0; i < self.get()->parents.size(); ++i) {
            const Var& p = self.parent(i);
            grads.push_back(slice_cols(g, at, p.cols()));
            at += p.cols();
        }
        return grads;
    });
}

namespace {

// Places a gradient block back into a zero matrix; the adjoint of slice_cols.
Var pad_cols(const Var& a, Eigen::Index left, Eigen::Index total) {
    Matrix v = Matrix::Zero(a.rows(), total);
    v.middleCols(left, a.cols()) = a.value();
    const Eigen::Index n = a.cols();
    return make(std::move(v), {a},
                [left, n](const Var&, const Var& g) -> std::vector<Var> {
                    return {slice_cols(g, left, n)};
                });
}

} // namespace

Var slice_cols(const Var& a, Eigen::Index start, Eigen::Index n) {
    if (start < 0 || n < 0 || start + n > a.cols()) {
        throw std::invalid_argument("slice_cols: range out of bounds");
    }
    const Eigen::Index total = a.cols();
    return make(a.value().middleCols(start, n), {a},
                [start, total](const Var& self, const Var& g) -> std::vector<Var> {
                    (void)self;
                    return {pad_cols(g, start, total)};
                });
}

Var detach(const Var& a) { return Var::constant(a.value()); }

// --- composite helpers ----------------------------------------------------------

Var softmax_rows(const Var& a) {
    // Subtracting the (detached) rowwise max is a constant shift per row;
    // softmax is shift-invariant so gradients are unaffected.
    Matrix m = a.value().rowwise().maxCoeff();
    Var shifted = sub(a, Var::constant(std::move(m)));
    Var e = exp(shifted);
    return div(e, rowwise_sum(e));
}

Var rowwise_sqnorm(const Var& a) { return rowwise_sum(square(a)); }

Var pairwise_sqdist(const Var& x, const Var& y) {
    if (x.cols() != y.cols()) shape_fail("pairwise_sqdist", x.value(), y.value());
    Var cross = matmul(x, transpose(y));                 // n x m
    Var xn = rowwise_sqnorm(x);                          // n x 1
    Var yn = transpose(rowwise_sqnorm(y));               // 1 x m
    // The expanded form can go a few ulps negative where the true distance is
    // zero; floor it there (the true gradient vanishes at that minimum).
    return relu(add(add(mul(cross, -2.0), xn), yn));
}

// --- reverse pass ----------------------------------------------------------------

Var Gradients::at(const Var& v) const {
    auto it = map_.find(v.get());
    if (it != map_.end()) return it->second;
    return Var::constant(Matrix::Zero(v.rows(), v.cols()));
}

Gradients backward(const Var& root) {
    if (root.rows() != 1 || root.cols() != 1) {
        throw std::invalid_argument("backward: root must be a 1x1 scalar");
    }
    Gradients out;
    if (!root.requires_grad()) return out;

    // Iterative post-order DFS over the requires_grad subgraph.
    std::vector<Node*> topo;
    std::unordered_set<Node*> seen;
    std::vector<std::pair<Var, std::size_t>> stack;
    stack.emplace_back(root, 0);
    seen.insert(root.get());
    while (!stack.empty()) {
        auto& [v, next] = stack.back();
        Node* n = v.get();
        if (next < n->parents.size()) {
            const Var& p = n->parents[next++];
            if (p.requires_grad() && !seen.count(p.get())) {
                seen.insert(p.get());
                stack.emplace_back(p, 0);
            }
        } else {
            topo.push_back(n);
            stack.pop_back();
        }
    }

    // Holds Vars alive (and gives Node* -> Var lookup) during the sweep.
    std::unordered_map<const Node*, Var> handles;
    handles.reserve(seen.size());
    auto handle_of = [&](const Var& v) { handles.emplace(v.get(), v); };
    handle_of(root);

    out.map_[root.get()] = Var::scalar(1.0);
    for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
        Node* n = *it;
        auto git = out.map_.find(n);
        if (git == out.map_.end()) continue; // unreachable from root
        if (!n->backward) continue;          // leaf
        Var self = handles.at(n);
        std::vector<Var> contribs = n->backward(self, git->second);
        for (std::size_t i = 0; i < n->parents.size(); ++i) {
            const Var& p = n->parents[i];
            if (!p.requires_grad()) continue;
            if (i >= contribs.size() || !contribs[i].valid()) continue;
            handle_of(p);
            auto pit = out.map_.find(p.get());
            if (pit == out.map_.end()) {
                out.map_[p.get()] = contribs[i];
            } else {
                pit->second = add(pit->second, contribs[i]);
            }
        }
    }
    return out;
}

} // namespace rwae
