#include "rwae/model.hpp"

#include <cmath>
#include <stdexcept>

#include "rwae/errors.hpp"

namespace rwae {

namespace {
constexpr double kLogVarLo = -10.0;
constexpr double kLogVarHi = 10.0;
} // namespace

Var reparam_sample(const GaussianParams& p, const Var& eps) {
    if (eps.rows() != p.mean.rows() || eps.cols() != p.mean.cols()) {
        throw std::invalid_argument("reparam_sample: eps shape must match mean");
    }
    return add(p.mean, mul(exp(mul(p.log_var, 0.5)), eps));
}

Var gumbel_softmax_sample(const Var& log_alpha, double tau, const Var& g) {
    if (!(tau > 0.0)) throw std::invalid_argument("gumbel_softmax_sample: tau must be > 0");
    if (g.rows() != log_alpha.rows() || g.cols() != log_alpha.cols()) {
        throw std::invalid_argument("gumbel_softmax_sample: noise shape mismatch");
    }
    return softmax_rows(mul(add(log_alpha, g), 1.0 / tau));
}

Matrix gumbel_softmax_sample(const Matrix& log_alpha, double tau, const Matrix& g) {
    return gumbel_softmax_sample(Var::constant(log_alpha), tau, Var::constant(g)).value();
}

double categorical_kl_to_uniform(const Eigen::VectorXd& class_probs) {
    const Eigen::Index a = class_probs.size();
    if (a < 1) throw std::invalid_argument("categorical_kl_to_uniform: empty vector");
    double sum = 0.0;
    for (Eigen::Index i = 0; i < a; ++i) {
        const double p = class_probs(i);
        if (!(p >= 0.0 && p <= 1.0)) {
            throw std::invalid_argument("categorical_kl_to_uniform: probabilities must be in [0,1]");
        }
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-6) {
        throw std::invalid_argument("categorical_kl_to_uniform: probabilities must sum to 1");
    }
    double kl = 0.0;
    for (Eigen::Index i = 0; i < a; ++i) {
        const double p = class_probs(i);
        if (p > 0.0) kl += p * std::log(p * static_cast<double>(a));
    }
    return kl;
}

Var categorical_kl_to_uniform_rows(const Var& probs) {
    const double a = static_cast<double>(probs.cols());
    return rowwise_sum(mul(probs, log(mul(probs, a))));
}

void ModelConfig::validate() const {
    if (frame_dim < 1) throw std::invalid_argument("ModelConfig: frame_dim must be >= 1");
    if (d_c < 1 || d_m < 1) throw std::invalid_argument("ModelConfig: latent dims must be >= 1");
    if (n_actions < 0) throw std::invalid_argument("ModelConfig: n_actions must be >= 0");
    for (int w : {feat_hidden, feat_dim, enc_rnn, dyn_rnn, prior_rnn, dec_rnn, dec_hidden,
                  action_rnn}) {
        if (w < 1) throw std::invalid_argument("ModelConfig: layer widths must be >= 1");
    }
}

RWAEModel::RWAEModel(const ModelConfig& cfg, Rng& rng) : cfg_(cfg) {
    cfg_.validate();
    feature_ = MLP(cfg_.frame_dim, {cfg_.feat_hidden}, cfg_.feat_dim, Act::Tanh, Act::Tanh, rng);
    static_rnn_ = GRUCell(cfg_.feat_dim, cfg_.enc_rnn, rng);
    static_mean_ = Linear(cfg_.enc_rnn, cfg_.d_c, rng);
    static_logvar_ = Linear(cfg_.enc_rnn, cfg_.d_c, rng);
    dyn_rnn_ = GRUCell(cfg_.feat_dim + cfg_.d_m, cfg_.dyn_rnn, rng);
    dyn_mean_ = Linear(cfg_.dyn_rnn, cfg_.d_m, rng);
    dyn_logvar_ = Linear(cfg_.dyn_rnn, cfg_.d_m, rng);
    prior_rnn_ = GRUCell(cfg_.d_m, cfg_.prior_rnn, rng);
    prior_mean_ = Linear(cfg_.prior_rnn, cfg_.d_m, rng);
    prior_logvar_ = Linear(cfg_.prior_rnn, cfg_.d_m, rng);
    const int dec_in_dim = cfg_.d_c + cfg_.d_m + cfg_.n_actions;
    dec_in_ = Linear(dec_in_dim, cfg_.dec_rnn, rng);
    dec_rnn_ = GRUCell(cfg_.dec_rnn, cfg_.dec_rnn, rng);
    dec_out_ = MLP(cfg_.dec_rnn, {cfg_.dec_hidden}, cfg_.frame_dim, Act::Tanh, Act::Sigmoid, rng);
    action_rnn_ = GRUCell(cfg_.d_m, cfg_.action_rnn, rng);
    action_head_ = Linear(cfg_.action_rnn, std::max(cfg_.n_actions, 1), rng);
    critic = Critic(cfg_.d_c, cfg_.critic_hidden, rng, cfg_.spectral);
}

GaussianParams RWAEModel::gaussian_head(const Var& h, const Linear& mean,
                                        const Linear& log_var) const {
    return {mean(h), clamp(log_var(h), kLogVarLo, kLogVarHi)};
}

Var RWAEModel::frame_features(const Var& frames) const {
    if (frames.cols() != cfg_.frame_dim) {
        throw std::invalid_argument("frame_features: expected " + std::to_string(cfg_.frame_dim) +
                                    " columns, got " + std::to_string(frames.cols()));
    }
    return feature_(frames);
}

GaussianParams RWAEModel::encode_static(const std::vector<Var>& feats) const {
    if (feats.empty()) throw std::invalid_argument("encode_static: empty sequence");
    Var h = static_rnn_.initial_state(feats[0].rows());
    for (const Var& f : feats) h = static_rnn_.step(f, h);
    return gaussian_head(h, static_mean_, static_logvar_);
}

Var RWAEModel::dyn_initial_state(Eigen::Index batch) const {
    return dyn_rnn_.initial_state(batch);
}

RWAEModel::DynStep RWAEModel::encode_dynamic_step(const Var& feat, const Var& z_prev,
                                                  const Var& state) const {
    Var h = dyn_rnn_.step(concat_cols({feat, z_prev}), state);
    return {gaussian_head(h, dyn_mean_, dyn_logvar_), h};
}

Var RWAEModel::prior_initial_state(Eigen::Index batch) const {
    return prior_rnn_.initial_state(batch);
}

RWAEModel::PriorStep RWAEModel::prior_dynamic_step(const Var& z_prev, const Var& state) const {
    Var h = prior_rnn_.step(z_prev, state);
    return {gaussian_head(h, prior_mean_, prior_logvar_), h};
}

Var RWAEModel::decoder_initial_state(Eigen::Index batch) const {
    return dec_rnn_.initial_state(batch);
}

RWAEModel::DecodeStep RWAEModel::decode_step(const Var& z_c, const Var& z_m,
                                             const std::optional<Var>& action,
                                             const Var& state) const {
    if (has_actions() != action.has_value()) {
        throw std::invalid_argument(has_actions()
                                        ? "decode_step: model expects an action input"
                                        : "decode_step: model has no action variable");
    }
    std::vector<Var> parts = {z_c, z_m};
    if (action) parts.push_back(*action);
    Var h = dec_rnn_.step(tanh(dec_in_(concat_cols(parts))), state);
    return {dec_out_(h), h};
}

Var RWAEModel::infer_action_logits(const std::vector<Var>& z_m_seq) const {
    if (!has_actions()) throw std::invalid_argument("infer_action: model has no action variable");
    if (z_m_seq.empty()) throw std::invalid_argument("infer_action: empty motion sequence");
    Var h = action_rnn_.initial_state(z_m_seq[0].rows());
    for (const Var& z : z_m_seq) h = action_rnn_.step(z, h);
    return action_head_(h);
}

Var RWAEModel::infer_action(const std::vector<Var>& z_m_seq) const {
    return softmax_rows(infer_action_logits(z_m_seq));
}

Var RWAEModel::zero_motion(Eigen::Index batch) const {
    return Var::constant(Matrix::Zero(batch, cfg_.d_m));
}

namespace {

Var draw_noise(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.normal();
    }
    return Var::constant(std::move(m));
}

} // namespace

SequenceEncoding RWAEModel::encode_sequence(const std::vector<Var>& frames, Rng* noise) const {
    if (frames.empty()) throw std::invalid_argument("encode_sequence: empty sequence");
    const Eigen::Index b = frames[0].rows();
    std::vector<Var> feats;
    feats.reserve(frames.size());
    for (const Var& x : frames) feats.push_back(frame_features(x));

    SequenceEncoding out;
    out.static_post = encode_static(feats);
    out.z_c = noise ? reparam_sample(out.static_post, draw_noise(b, cfg_.d_c, *noise))
                    : out.static_post.mean;

    Var state = dyn_initial_state(b);
    Var z_prev = zero_motion(b);
    for (const Var& f : feats) {
        DynStep step = encode_dynamic_step(f, z_prev, state);
        Var z = noise ? reparam_sample(step.post, draw_noise(b, cfg_.d_m, *noise))
                      : step.post.mean;
        out.dyn_post.push_back(step.post);
        out.z_m.push_back(z);
        state = step.state;
        z_prev = z;
    }
    return out;
}

std::vector<Var> RWAEModel::decode_sequence(const Var& z_c, const std::vector<Var>& z_m,
                                            const std::optional<Var>& action) const {
    Var state = decoder_initial_state(z_c.rows());
    std::vector<Var> frames;
    frames.reserve(z_m.size());
    for (const Var& z : z_m) {
        DecodeStep step = decode_step(z_c, z, action, state);
        frames.push_back(step.frame);
        state = step.state;
    }
    return frames;
}

std::vector<Var> RWAEModel::prior_rollout(Eigen::Index batch, int timesteps, Rng& noise) const {
    if (timesteps < 1) throw std::invalid_argument("prior_rollout: timesteps must be >= 1");
    Var state = prior_initial_state(batch);
    Var z_prev = zero_motion(batch);
    std::vector<Var> out;
    out.reserve(static_cast<std::size_t>(timesteps));
    for (int t = 0; t < timesteps; ++t) {
        PriorStep step = prior_dynamic_step(z_prev, state);
        Var z = reparam_sample(step.prior, draw_noise(batch, cfg_.d_m, noise));
        out.push_back(z);
        state = step.state;
        z_prev = z;
    }
    return out;
}

ParamList RWAEModel::encoder_params() const {
    ParamList out;
    feature_.collect("enc.feature", out);
    static_rnn_.collect("enc.static_rnn", out);
    static_mean_.collect("enc.static_mean", out);
    static_logvar_.collect("enc.static_logvar", out);
    dyn_rnn_.collect("enc.dyn_rnn", out);
    dyn_mean_.collect("enc.dyn_mean", out);
    dyn_logvar_.collect("enc.dyn_logvar", out);
    if (has_actions()) {
        action_rnn_.collect("enc.action_rnn", out);
        action_head_.collect("enc.action_head", out);
    }
    return out;
}

ParamList RWAEModel::prior_params() const {
    ParamList out;
    prior_rnn_.collect("prior.rnn", out);
    prior_mean_.collect("prior.mean", out);
    prior_logvar_.collect("prior.logvar", out);
    return out;
}

ParamList RWAEModel::decoder_params() const {
    ParamList out;
    dec_in_.collect("dec.in", out);
    dec_rnn_.collect("dec.rnn", out);
    dec_out_.collect("dec.out", out);
    return out;
}

ParamList RWAEModel::critic_params() const {
    ParamList out;
    critic.collect("critic", out);
    return out;
}

ParamList RWAEModel::all_params() const {
    ParamList out = encoder_params();
    ParamList prior = prior_params();
    ParamList dec = decoder_params();
    ParamList cr = critic_params();
    out.insert(out.end(), prior.begin(), prior.end());
    out.insert(out.end(), dec.begin(), dec.end());
    out.insert(out.end(), cr.begin(), cr.end());
    return out;
}

} // namespace rwae
