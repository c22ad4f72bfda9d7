#pragma once

#include <string>
#include <vector>

#include "rwae/graph.hpp"
#include "rwae/rng.hpp"

namespace rwae {

// Handle to a named parameter array. `trainable` is false for persistent
// buffers (e.g. spectral-norm power-iteration vectors) that are checkpointed
// but never touched by the optimizer.
struct ParamRef {
    std::string name;
    Var var;
    bool trainable = true;
};

using ParamList = std::vector<ParamRef>;

// Uniform fan-in initialization: U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
Matrix uniform_init(Eigen::Index rows, Eigen::Index cols, Eigen::Index fan_in, Rng& rng);

enum class Act { None, Tanh, Sigmoid, Relu, LeakyRelu };

Var activate(const Var& x, Act act);

// Affine map y = x W^T + b with W: out x in, b: 1 x out.
struct Linear {
    Var W;
    Var b;

    Linear() = default;
    Linear(int in, int out, Rng& rng);

    Var operator()(const Var& x) const { return add(matmul(x, transpose(W)), b); }
    int in_dim() const { return static_cast<int>(W.cols()); }
    int out_dim() const { return static_cast<int>(W.rows()); }
    void collect(const std::string& prefix, ParamList& out) const;
};

// Fully-connected stack with a shared hidden activation and an output activation.
struct MLP {
    std::vector<Linear> layers;
    Act hidden_act = Act::Tanh;
    Act out_act = Act::None;

    MLP() = default;
    MLP(int in, const std::vector<int>& hidden, int out, Act hidden_act, Act out_act, Rng& rng);

    Var operator()(const Var& x) const;
    void collect(const std::string& prefix, ParamList& out) const;
};

// Single-layer gated recurrence (GRU).
//   r = sigmoid(x Wxr^T + h Whr^T + br)
//   u = sigmoid(x Wxu^T + h Whu^T + bu)
//   c = tanh(x Wxc^T + (r.h) Whc^T + bc)
//   h' = u.h + (1-u).c
struct GRUCell {
    Linear xr, xu, xc;   // input-to-gate affine maps (carry the biases)
    Var hr, hu, hc;      // hidden-to-gate weights, hidden x hidden

    GRUCell() = default;
    GRUCell(int in, int hidden, Rng& rng);

    int hidden_dim() const { return static_cast<int>(hr.rows()); }
    Var initial_state(Eigen::Index batch) const;
    Var step(const Var& x, const Var& h) const;
    void collect(const std::string& prefix, ParamList& out) const;
};

} // namespace rwae
