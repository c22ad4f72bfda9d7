#include "rwae/divergences.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "rwae/errors.hpp"

namespace rwae {

namespace {

constexpr double kProbEps = 1e-7;

void check_two_sample(const Matrix& x, const Matrix& y) {
    if (x.cols() != y.cols()) {
        throw std::invalid_argument("two-sample estimator: dimension mismatch (" +
                                    std::to_string(x.cols()) + " vs " +
                                    std::to_string(y.cols()) + ")");
    }
    if (x.rows() < 1 || y.rows() < 1 || x.cols() < 1) {
        throw std::invalid_argument("two-sample estimator: empty sample set");
    }
    if (!x.allFinite() || !y.allFinite()) {
        throw numeric_error("two-sample estimator: non-finite sample entries");
    }
}

double kernel_eval(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b,
                   const KernelSpec& k) {
    if (k.kind == KernelSpec::Kind::Linear) return a.dot(b);
    const double d2 = (a - b).squaredNorm();
    double v = 0.0;
    for (double s : k.bandwidths) v += std::exp(-d2 / (2.0 * s * s));
    return v;
}

// sum_{i<j} k(x_i, x_j), doubled: the off-diagonal sum of a symmetric gram.
double within_offdiag_sum(const Matrix& x, const KernelSpec& k) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (Eigen::Index j = i + 1; j < x.rows(); ++j) {
            acc += kernel_eval(x.row(i), x.row(j), k);
        }
    }
    return 2.0 * acc;
}

} // namespace

KernelSpec KernelSpec::mixture_rbf(std::vector<double> bw) {
    KernelSpec k;
    k.kind = Kind::MixtureRbf;
    k.bandwidths = std::move(bw);
    k.validate();
    return k;
}

KernelSpec KernelSpec::linear() {
    KernelSpec k;
    k.kind = Kind::Linear;
    k.bandwidths.clear();
    return k;
}

void KernelSpec::validate() const {
    if (kind == Kind::Linear) return;
    if (bandwidths.empty()) {
        throw std::invalid_argument("KernelSpec: bandwidth list must be non-empty");
    }
    for (double s : bandwidths) {
        if (!(s > 0.0) || !std::isfinite(s)) {
            throw std::invalid_argument("KernelSpec: bandwidths must be positive finite");
        }
    }
}

Matrix kernel_gram(const Matrix& x, const Matrix& y, const KernelSpec& k) {
    k.validate();
    check_two_sample(x, y);
    Matrix g(x.rows(), y.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (Eigen::Index j = 0; j < y.rows(); ++j) {
            g(i, j) = kernel_eval(x.row(i), y.row(j), k);
        }
    }
    return g;
}

Var kernel_gram(const Var& x, const Var& y, const KernelSpec& k) {
    k.validate();
    if (x.cols() != y.cols()) {
        throw std::invalid_argument("kernel_gram: dimension mismatch");
    }
    if (k.kind == KernelSpec::Kind::Linear) return matmul(x, transpose(y));
    Var d2 = pairwise_sqdist(x, y);
    Var g;
    for (double s : k.bandwidths) {
        Var term = exp(mul(d2, -1.0 / (2.0 * s * s)));
        g = g.valid() ? add(g, term) : term;
    }
    return g;
}

double mmd2_unbiased(const Matrix& x, const Matrix& y, const KernelSpec& k) {
    k.validate();
    check_two_sample(x, y);
    const Eigen::Index n = x.rows();
    const Eigen::Index m = y.rows();
    if (n < 2 || m < 2) {
        throw std::invalid_argument(
            "mmd2_unbiased: both sample sets need at least 2 points (within-set term)");
    }
    const double xx = within_offdiag_sum(x, k) / (static_cast<double>(n) * (n - 1));
    const double yy = within_offdiag_sum(y, k) / (static_cast<double>(m) * (m - 1));
    // Cross-term values are sorted before accumulation, making the sum a pure
    // function of the value multiset; the estimator is then exactly symmetric
    // in its arguments.
    std::vector<double> cross;
    cross.reserve(static_cast<std::size_t>(n * m));
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < m; ++j) {
            cross.push_back(kernel_eval(x.row(i), y.row(j), k));
        }
    }
    std::sort(cross.begin(), cross.end());
    const double cross_sum = std::accumulate(cross.begin(), cross.end(), 0.0);
    return xx + yy - 2.0 * cross_sum / (static_cast<double>(n) * m);
}

Var mmd2_unbiased(const Var& x, const Var& y, const KernelSpec& k) {
    const Eigen::Index n = x.rows();
    const Eigen::Index m = y.rows();
    if (n < 2 || m < 2) {
        throw std::invalid_argument(
            "mmd2_unbiased: both sample sets need at least 2 points (within-set term)");
    }
    Var gxx = kernel_gram(x, x, k);
    Var gyy = kernel_gram(y, y, k);
    Var gxy = kernel_gram(x, y, k);
    Var xx = mul(sub(sum_all(gxx), diag_sum(gxx)), 1.0 / (static_cast<double>(n) * (n - 1)));
    Var yy = mul(sub(sum_all(gyy), diag_sum(gyy)), 1.0 / (static_cast<double>(m) * (m - 1)));
    Var xy = mul(sum_all(gxy), -2.0 / (static_cast<double>(n) * m));
    return add(add(xx, yy), xy);
}

Critic::Critic(int in_dim, const std::vector<int>& hidden, Rng& rng, bool spectral_)
    : net(in_dim, hidden, 1, Act::LeakyRelu, Act::None, rng), spectral(spectral_) {
    if (spectral) {
        for (const Linear& l : net.layers) {
            Matrix u(l.W.rows(), 1);
            for (Eigen::Index i = 0; i < u.rows(); ++i) u(i, 0) = rng.normal();
            u /= u.norm();
            sn_u.push_back(Var::constant(u)); // buffer, not a trainable leaf
        }
    }
}

Var Critic::layer_weight(std::size_t i) const {
    const Var& w = net.layers[i].W;
    if (!spectral) return w;
    // sigma = u^T W v with u, v from power iteration, treated as constants;
    // the quotient keeps W's gradient path intact.
    const Matrix& wv = w.value();
    const Matrix& u = sn_u[i].value();
    Matrix v = wv.transpose() * u;
    const double vn = v.norm();
    if (vn > 0) v /= vn;
    Var sigma = matmul(matmul(Var::constant(u.transpose()), w), Var::constant(v)); // 1x1
    return div(w, sigma);
}

Var Critic::raw(const Var& z) const {
    Var h = z;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        h = add(matmul(h, transpose(layer_weight(i))), net.layers[i].b);
        if (i + 1 < net.layers.size()) h = activate(h, net.hidden_act);
    }
    return h;
}

Var Critic::prob(const Var& z) const { return clamp(sigmoid(raw(z)), kProbEps, 1.0 - kProbEps); }

void Critic::power_iterate() {
    if (!spectral) return;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const Matrix& w = net.layers[i].W.value();
        Matrix& u = sn_u[i].get()->value;
        Matrix v = w.transpose() * u;
        const double vn = v.norm();
        if (vn > 0) v /= vn;
        Matrix nu = w * v;
        const double un = nu.norm();
        if (un > 0) u = nu / un;
    }
}

void Critic::collect(const std::string& prefix, ParamList& out) const {
    net.collect(prefix, out);
    for (std::size_t i = 0; i < sn_u.size(); ++i) {
        out.push_back({prefix + ".sn_u" + std::to_string(i), sn_u[i], false});
    }
}

Var gradient_norm_penalty(const Matrix& points, const std::function<Var(const Var&)>& f) {
    if (points.rows() < 1) {
        throw std::invalid_argument("gradient_norm_penalty: need at least one point");
    }
    Var x = Var::param(points);
    Var y = f(x);
    if (y.rows() != points.rows() || y.cols() != 1) {
        throw std::invalid_argument("gradient_norm_penalty: f must map n x d to n x 1");
    }
    // f acts row-independently, so d(sum f)/dx stacks the per-point gradients.
    Gradients g = backward(sum_all(y));
    Var gx = g.at(x);
    if (!gx.value().allFinite()) {
        throw numeric_error("gradient_norm_penalty: non-finite gradient");
    }
    return mean_all(rowwise_sqnorm(gx));
}

double gradient_norm_penalty_value(const Matrix& points,
                                   const std::function<Var(const Var&)>& f) {
    return gradient_norm_penalty(points, f).item();
}

Var scaled_mmd_penalty(const Var& post, const Var& prior, const Critic& f) {
    Var fp = f.raw(post);
    Var fq = f.raw(prior);
    if (!fp.value().allFinite() || !fq.value().allFinite()) {
        throw numeric_error("scaled_mmd_penalty: non-finite feature-map outputs");
    }
    const KernelSpec unit = KernelSpec::mixture_rbf({1.0});
    Var num = mmd2_unbiased(fp, fq, unit);
    Var gn = gradient_norm_penalty(prior.value(), [&f](const Var& z) { return f.raw(z); });
    Var den = add(mul(gn, 10.0), 1.0);
    return div(num, den);
}

double scaled_mmd_penalty_value(const Matrix& post, const Matrix& prior, const Critic& f) {
    return scaled_mmd_penalty(Var::constant(post), Var::constant(prior), f).item();
}

Var gan_encoder_loss(const Var& post, const Critic& d) {
    return neg(mean_all(log(d.prob(post))));
}

Var gan_discriminator_loss(const Var& prior, const Var& post, const Critic& d, double lambda,
                           const Matrix& alphas) {
    if (prior.rows() != post.rows()) {
        throw std::invalid_argument(
            "gan_discriminator_loss: prior/posterior sets must match in size for pairing");
    }
    if (lambda < 0.0) {
        throw std::invalid_argument("gan_discriminator_loss: lambda must be >= 0");
    }
    Var fixed_post = detach(post);
    Var data_term = add(mean_all(log(d.prob(prior))),
                        mean_all(log(sub(1.0, d.prob(fixed_post)))));
    Var loss = neg(data_term);
    if (lambda > 0.0) {
        Matrix interp(prior.rows(), prior.cols());
        for (Eigen::Index i = 0; i < interp.rows(); ++i) {
            const double a = alphas(i, 0);
            interp.row(i) = a * prior.value().row(i) + (1.0 - a) * post.value().row(i);
        }
        Var gp = gradient_norm_penalty(interp, [&d](const Var& z) { return d.prob(z); });
        loss = add(loss, mul(gp, lambda));
    }
    return loss;
}

GanLosses gan_regularizer_losses(const Matrix& prior, const Matrix& post, const Critic& d,
                                 double lambda, const std::vector<double>& alphas) {
    if (prior.rows() != post.rows()) {
        throw std::invalid_argument("gan_regularizer_losses: mismatched sample set sizes");
    }
    if (static_cast<Eigen::Index>(alphas.size()) != prior.rows()) {
        throw std::invalid_argument("gan_regularizer_losses: need one alpha per sample pair");
    }
    Matrix a(prior.rows(), 1);
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        if (alphas[i] < 0.0 || alphas[i] > 1.0) {
            throw std::invalid_argument("gan_regularizer_losses: alphas must lie in [0,1]");
        }
        a(i, 0) = alphas[i];
    }
    Var prior_v = Var::constant(prior);
    Var post_v = Var::constant(post);
    return {gan_discriminator_loss(prior_v, post_v, d, lambda, a).item(),
            gan_encoder_loss(post_v, d).item()};
}

} // namespace rwae
