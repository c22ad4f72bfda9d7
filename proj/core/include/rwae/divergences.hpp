#pragma once

#include <functional>
#include <vector>

#include "rwae/graph.hpp"
#include "rwae/nn.hpp"

namespace rwae {

// Mixture-of-RBF kernel description: k(x,y) = sum_i exp(-||x-y||^2 / (2 s_i^2)).
// The Linear kind (k(x,y) = x.y) exists for oracle tests only and is rejected
// by training configuration validation.
struct KernelSpec {
    enum class Kind { MixtureRbf, Linear };

    Kind kind = Kind::MixtureRbf;
    std::vector<double> bandwidths = {1.0, 2.0, 4.0, 8.0, 16.0};

    static KernelSpec mixture_rbf(std::vector<double> bw);
    static KernelSpec linear();

    // Throws std::invalid_argument on empty or non-positive bandwidths.
    void validate() const;
};

// Gram matrix between rows of X (n x d) and Y (m x d).
Matrix kernel_gram(const Matrix& x, const Matrix& y, const KernelSpec& k);
Var kernel_gram(const Var& x, const Var& y, const KernelSpec& k);

// Unbiased MMD^2 estimator: within-set terms 1/(n(n-1)) sum_{i!=j} k, cross
// term -2/(nm) sum_{ij} k. Requires n, m >= 2; may legitimately be negative.
// The plain overload accumulates in an argument-order-independent way, so
// mmd2_unbiased(X, Y) == mmd2_unbiased(Y, X) holds bit-exactly.
double mmd2_unbiased(const Matrix& x, const Matrix& y, const KernelSpec& k);
Var mmd2_unbiased(const Var& x, const Var& y, const KernelSpec& k);

// Latent-space critic: a fully-connected net mapping points (rows) to one
// scalar each. Serves as the discriminator D (via prob()) or as the scaled-MMD
// feature map f (via raw()). Optional spectral weight parametrization divides
// each weight matrix by a power-iteration estimate of its largest singular
// value; call power_iterate() once per optimization step to refresh the
// estimates (kept out of the forward pass so evaluation stays pure).
struct Critic {
    MLP net;
    bool spectral = false;
    std::vector<Var> sn_u; // per-layer left singular vector estimates (buffers)

    Critic() = default;
    Critic(int in_dim, const std::vector<int>& hidden, Rng& rng, bool spectral = false);

    // Feature-map output, one finite scalar per row: n x 1.
    Var raw(const Var& z) const;
    // Discriminator output in (0,1), clamped away from the endpoints.
    Var prob(const Var& z) const;

    void power_iterate();
    void collect(const std::string& prefix, ParamList& out) const;

private:
    Var layer_weight(std::size_t i) const;
};

// Mean over rows of ||grad f(z)||^2, computed by reverse-mode differentiation
// w.r.t. the points. f must map an n x d Var to an n x 1 Var row-independently.
// The result stays differentiable w.r.t. any parameters used inside f.
Var gradient_norm_penalty(const Matrix& points, const std::function<Var(const Var&)>& f);
double gradient_norm_penalty_value(const Matrix& points, const std::function<Var(const Var&)>& f);

// Scaled MMD between posterior and prior content samples:
//   MMD^2_{k_f}(post, prior) / (1 + 10 E_prior ||grad f||^2)
// with k_f(x,y) = exp(-(f(x)-f(y))^2 / 2).
Var scaled_mmd_penalty(const Var& post, const Var& prior, const Critic& f);
double scaled_mmd_penalty_value(const Matrix& post, const Matrix& prior, const Critic& f);

// Adversarial encoder loss (non-saturating): -E_post log D(z).
Var gan_encoder_loss(const Var& post, const Critic& d);

// Discriminator loss: -[E_prior log D + E_post log(1-D)] plus the interpolated
// gradient penalty lambda E||grad D(a z + (1-a) z~)||^2. Posterior samples are
// treated as fixed inputs here (the term trains the critic only).
Var gan_discriminator_loss(const Var& prior, const Var& post, const Critic& d, double lambda,
                           const Matrix& alphas);

struct GanLosses {
    double disc_loss;
    double enc_loss;
};

// Both GAN regularizer objectives at once; alphas holds one interpolation
// coefficient in [0,1] per sample pair (prior and posterior sets must match
// in size).
GanLosses gan_regularizer_losses(const Matrix& prior, const Matrix& post, const Critic& d,
                                 double lambda, const std::vector<double>& alphas);

} // namespace rwae
