#include "rwae/nn.hpp"

#include <stdexcept>

namespace rwae {

Matrix uniform_init(Eigen::Index rows, Eigen::Index cols, Eigen::Index fan_in, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) {
            m(i, j) = bound * (2.0 * rng.uniform() - 1.0);
        }
    }
    return m;
}

Var activate(const Var& x, Act act) {
    switch (act) {
        case Act::None: return x;
        case Act::Tanh: return tanh(x);
        case Act::Sigmoid: return sigmoid(x);
        case Act::Relu: return relu(x);
        case Act::LeakyRelu: return leaky_relu(x, 0.2);
    }
    throw std::logic_error("activate: unknown activation");
}

Linear::Linear(int in, int out, Rng& rng)
    : W(Var::param(uniform_init(out, in, in, rng))),
      b(Var::param(Matrix::Zero(1, out))) {}

void Linear::collect(const std::string& prefix, ParamList& out) const {
    out.push_back({prefix + ".W", W, true});
    out.push_back({prefix + ".b", b, true});
}

MLP::MLP(int in, const std::vector<int>& hidden, int out, Act hidden_act_, Act out_act_,
         Rng& rng) {
    hidden_act = hidden_act_;
    out_act = out_act_;
    int prev = in;
    for (int h : hidden) {
        layers.emplace_back(prev, h, rng);
        prev = h;
    }
    layers.emplace_back(prev, out, rng);
}

Var MLP::operator()(const Var& x) const {
    Var h = x;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        h = layers[i](h);
        h = activate(h, i + 1 < layers.size() ? hidden_act : out_act);
    }
    return h;
}

void MLP::collect(const std::string& prefix, ParamList& out) const {
    for (std::size_t i = 0; i < layers.size(); ++i) {
        layers[i].collect(prefix + "." + std::to_string(i), out);
    }
}

GRUCell::GRUCell(int in, int hidden, Rng& rng)
    : xr(in, hidden, rng),
      xu(in, hidden, rng),
      xc(in, hidden, rng),
      hr(Var::param(uniform_init(hidden, hidden, hidden, rng))),
      hu(Var::param(uniform_init(hidden, hidden, hidden, rng))),
      hc(Var::param(uniform_init(hidden, hidden, hidden, rng))) {}

Var GRUCell::initial_state(Eigen::Index batch) const {
    return Var::constant(Matrix::Zero(batch, hidden_dim()));
}

Var GRUCell::step(const Var& x, const Var& h) const {
    Var r = sigmoid(add(xr(x), matmul(h, transpose(hr))));
    Var u = sigmoid(add(xu(x), matmul(h, transpose(hu))));
    Var c = tanh(add(xc(x), matmul(mul(r, h), transpose(hc))));
    return add(mul(u, h), mul(sub(1.0, u), c));
}

void GRUCell::collect(const std::string& prefix, ParamList& out) const {
    xr.collect(prefix + ".xr", out);
    xu.collect(prefix + ".xu", out);
    xc.collect(prefix + ".xc", out);
    out.push_back({prefix + ".hr", hr, true});
    out.push_back({prefix + ".hu", hu, true});
    out.push_back({prefix + ".hc", hc, true});
}

} // namespace rwae
