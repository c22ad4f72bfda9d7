#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <unordered_map>
#include <vector>

namespace rwae {

using Matrix = Eigen::MatrixXd;

class Var;

// One value in a computation graph. Nodes are immutable after construction;
// gradients are not stored on the node but produced by backward() as fresh
// graph values, so differentiating a gradient (double backprop) needs no
// special mode.
struct Node {
    Matrix value;
    bool requires_grad = false;
    std::vector<Var> parents;
    // Returns one gradient contribution per parent (entries for parents that
    // do not require grad may be left empty). `self` aliases this node.
    std::function<std::vector<Var>(const Var& self, const Var& grad)> backward;
};

// Shared handle to a Node. Graphs are plain shared_ptr DAGs: there is no
// global tape, so independent graphs can be built concurrently.
class Var {
public:
    Var() = default;
    explicit Var(std::shared_ptr<Node> n) : node_(std::move(n)) {}

    static Var constant(Matrix m);
    static Var scalar(double v);
    // Leaf that participates in gradient computation.
    static Var param(Matrix m);

    bool valid() const { return node_ != nullptr; }
    const Matrix& value() const { return node_->value; }
    Eigen::Index rows() const { return node_->value.rows(); }
    Eigen::Index cols() const { return node_->value.cols(); }
    bool requires_grad() const { return node_ && node_->requires_grad; }
    const Var& parent(std::size_t i) const { return node_->parents[i]; }
    Node* get() const { return node_.get(); }
    // Scalar accessor; the node must be 1x1.
    double item() const;

private:
    std::shared_ptr<Node> node_;
};

// --- graph construction -----------------------------------------------------

// Elementwise binary ops. Operands must either match shapes exactly or one of
// them may be 1x1, a 1xC row, or an Rx1 column broadcast against the other.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var div(const Var& a, const Var& b);

Var add(const Var& a, double b);
Var sub(double a, const Var& b);
Var mul(const Var& a, double b);

Var neg(const Var& a);
Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);

Var tanh(const Var& a);
Var sigmoid(const Var& a);
Var exp(const Var& a);
Var log(const Var& a);
Var sqrt(const Var& a);
Var square(const Var& a);
Var relu(const Var& a);
Var leaky_relu(const Var& a, double slope);
// Clamps values to [lo, hi]; gradient is passed through inside the interval
// and zero outside.
Var clamp(const Var& a, double lo, double hi);

Var sum_all(const Var& a);    // -> 1x1
Var mean_all(const Var& a);   // -> 1x1
Var colwise_sum(const Var& a); // RxC -> 1xC
Var rowwise_sum(const Var& a); // RxC -> Rx1
Var diag_sum(const Var& a);   // NxN -> 1x1

Var concat_cols(const std::vector<Var>& parts);
Var slice_cols(const Var& a, Eigen::Index start, Eigen::Index n);

// Value copy with the gradient path severed.
Var detach(const Var& a);

// Composite helpers (built from the primitives above).
Var softmax_rows(const Var& a);
Var rowwise_sqnorm(const Var& a); // RxC -> Rx1, squared L2 norm per row
// Squared distances ||x_i - y_j||^2 between rows of X (n x d) and Y (m x d).
Var pairwise_sqdist(const Var& x, const Var& y);

// --- differentiation ---------------------------------------------------------

// Result of one reverse pass: gradient values keyed by node identity. Holds
// shared ownership of the gradient graph, so grads stay differentiable.
class Gradients {
public:
    bool contains(const Var& v) const { return map_.count(v.get()) != 0; }
    // Gradient of the root w.r.t. v; zeros_like(v) if v was unreachable.
    Var at(const Var& v) const;

    std::unordered_map<const Node*, Var> map_;
};

// Reverse-mode differentiation of a 1x1 root. Gradients are built with the
// same ops used by the forward pass, so they can be differentiated again.
Gradients backward(const Var& root);

} // namespace rwae
