#include "rwae/train.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "rwae/errors.hpp"

namespace rwae {

namespace {

std::string fmt_double(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

std::string join_doubles(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ",";
        out += fmt_double(v[i]);
    }
    return out;
}

std::string join_ints(const std::vector<int>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(v[i]);
    }
    return out;
}

std::vector<double> parse_doubles(const std::string& s) {
    std::vector<double> out;
    std::istringstream is(s);
    std::string item;
    while (std::getline(is, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(std::stod(item));
    }
    return out;
}

std::vector<int> parse_ints(const std::string& s) {
    std::vector<int> out;
    std::istringstream is(s);
    std::string item;
    while (std::getline(is, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(std::stoi(item));
    }
    return out;
}

Matrix draw_normal(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.normal();
    }
    return m;
}

} // namespace

std::string to_string(RegMode m) { return m == RegMode::MMD ? "mmd" : "gan"; }
std::string to_string(ReconKind k) { return k == ReconKind::L2 ? "l2" : "bernoulli_ce"; }

RegMode parse_reg_mode(const std::string& s) {
    if (s == "mmd") return RegMode::MMD;
    if (s == "gan") return RegMode::GAN;
    throw std::invalid_argument("unknown regularizer mode '" + s + "' (expected mmd|gan)");
}

ReconKind parse_recon_kind(const std::string& s) {
    if (s == "l2") return ReconKind::L2;
    if (s == "bernoulli_ce") return ReconKind::BernoulliCE;
    throw std::invalid_argument("unknown reconstruction kind '" + s +
                                "' (expected l2|bernoulli_ce)");
}

void TrainConfig::validate() const {
    if (beta1 < 0 || beta2 < 0 || beta3 < 0) {
        throw std::invalid_argument("TrainConfig: penalty weights must be >= 0");
    }
    if (lambda_gp < 0) throw std::invalid_argument("TrainConfig: lambda_gp must be >= 0");
    if (inner_steps < 1) throw std::invalid_argument("TrainConfig: inner_steps must be >= 1");
    if (!(tau > 0)) throw std::invalid_argument("TrainConfig: tau must be > 0");
    if (batch_size < 2) {
        throw std::invalid_argument("TrainConfig: batch_size must be >= 2 (MMD needs n >= 2)");
    }
    if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
    if (!(lr_decoder > 0 && lr_encoder > 0 && lr_critic > 0)) {
        throw std::invalid_argument("TrainConfig: learning rates must be > 0");
    }
    if (!(adam_beta1 >= 0 && adam_beta1 < 1 && adam_beta2 >= 0 && adam_beta2 < 1)) {
        throw std::invalid_argument("TrainConfig: Adam betas must lie in [0, 1)");
    }
    if (d_c < 1 || d_m < 1) throw std::invalid_argument("TrainConfig: latent dims must be >= 1");
    if (beta3 > 0 && n_actions < 2) {
        throw std::invalid_argument(
            "TrainConfig: weak supervision (beta3 > 0) needs n_actions >= 2");
    }
    if (checkpoint_every < 0) {
        throw std::invalid_argument("TrainConfig: checkpoint_every must be >= 0");
    }
    KernelSpec::mixture_rbf(bandwidths); // validates the list
}

ModelConfig TrainConfig::model_config() const {
    if (frame_dim() < 1) {
        throw std::invalid_argument("TrainConfig: frame geometry not set");
    }
    ModelConfig mc;
    mc.frame_dim = frame_dim();
    mc.d_c = d_c;
    mc.d_m = d_m;
    mc.n_actions = weak_supervision() ? n_actions : 0;
    mc.feat_hidden = feat_hidden;
    mc.feat_dim = feat_dim;
    mc.enc_rnn = enc_rnn;
    mc.dyn_rnn = dyn_rnn;
    mc.prior_rnn = prior_rnn;
    mc.dec_rnn = dec_rnn;
    mc.dec_hidden = dec_hidden;
    mc.action_rnn = action_rnn;
    mc.critic_hidden = critic_hidden;
    mc.spectral = spectral;
    return mc;
}

void TrainConfig::to_kv(KvFile& kv, const std::string& section) const {
    kv.set(section, "mode", to_string(mode));
    kv.set(section, "beta1", fmt_double(beta1));
    kv.set(section, "beta2", fmt_double(beta2));
    kv.set(section, "beta3", fmt_double(beta3));
    kv.set(section, "lambda_gp", fmt_double(lambda_gp));
    kv.set(section, "inner_steps", std::to_string(inner_steps));
    kv.set(section, "tau", fmt_double(tau));
    kv.set(section, "recon", to_string(recon));
    kv.set(section, "lr_decoder", fmt_double(lr_decoder));
    kv.set(section, "lr_encoder", fmt_double(lr_encoder));
    kv.set(section, "lr_critic", fmt_double(lr_critic));
    kv.set(section, "adam_beta1", fmt_double(adam_beta1));
    kv.set(section, "adam_beta2", fmt_double(adam_beta2));
    kv.set(section, "epochs", std::to_string(epochs));
    kv.set(section, "batch_size", std::to_string(batch_size));
    kv.set(section, "d_c", std::to_string(d_c));
    kv.set(section, "d_m", std::to_string(d_m));
    kv.set(section, "n_actions", std::to_string(n_actions));
    kv.set(section, "bandwidths", join_doubles(bandwidths));
    kv.set(section, "seed", std::to_string(seed));
    kv.set(section, "spectral", spectral ? "1" : "0");
    kv.set(section, "feat_hidden", std::to_string(feat_hidden));
    kv.set(section, "feat_dim", std::to_string(feat_dim));
    kv.set(section, "enc_rnn", std::to_string(enc_rnn));
    kv.set(section, "dyn_rnn", std::to_string(dyn_rnn));
    kv.set(section, "prior_rnn", std::to_string(prior_rnn));
    kv.set(section, "dec_rnn", std::to_string(dec_rnn));
    kv.set(section, "dec_hidden", std::to_string(dec_hidden));
    kv.set(section, "action_rnn", std::to_string(action_rnn));
    kv.set(section, "critic_hidden", join_ints(critic_hidden));
    kv.set(section, "frame_channels", std::to_string(frame_channels));
    kv.set(section, "frame_height", std::to_string(frame_height));
    kv.set(section, "frame_width", std::to_string(frame_width));
    kv.set(section, "checkpoint_every", std::to_string(checkpoint_every));
}

TrainConfig TrainConfig::from_kv(const KvFile& kv, const std::string& section) {
    if (!kv.find(section)) throw format_error("config: missing [" + section + "] section");
    TrainConfig c;
    apply_kv(c, kv, section);
    return c;
}

void TrainConfig::apply_kv(TrainConfig& c, const KvFile& kv, const std::string& section) {
    const KvSection* s = kv.find(section);
    if (!s) return;
    for (const auto& [key, value] : s->entries) {
        if (key == "mode") c.mode = parse_reg_mode(value);
        else if (key == "beta1") c.beta1 = std::stod(value);
        else if (key == "beta2") c.beta2 = std::stod(value);
        else if (key == "beta3") c.beta3 = std::stod(value);
        else if (key == "lambda_gp") c.lambda_gp = std::stod(value);
        else if (key == "inner_steps") c.inner_steps = std::stoi(value);
        else if (key == "tau") c.tau = std::stod(value);
        else if (key == "recon") c.recon = parse_recon_kind(value);
        else if (key == "lr_decoder") c.lr_decoder = std::stod(value);
        else if (key == "lr_encoder") c.lr_encoder = std::stod(value);
        else if (key == "lr_critic") c.lr_critic = std::stod(value);
        else if (key == "adam_beta1") c.adam_beta1 = std::stod(value);
        else if (key == "adam_beta2") c.adam_beta2 = std::stod(value);
        else if (key == "epochs") c.epochs = std::stoi(value);
        else if (key == "batch_size") c.batch_size = std::stoi(value);
        else if (key == "d_c") c.d_c = std::stoi(value);
        else if (key == "d_m") c.d_m = std::stoi(value);
        else if (key == "n_actions") c.n_actions = std::stoi(value);
        else if (key == "bandwidths") c.bandwidths = parse_doubles(value);
        else if (key == "seed") c.seed = std::stoull(value);
        else if (key == "spectral") c.spectral = value == "1";
        else if (key == "feat_hidden") c.feat_hidden = std::stoi(value);
        else if (key == "feat_dim") c.feat_dim = std::stoi(value);
        else if (key == "enc_rnn") c.enc_rnn = std::stoi(value);
        else if (key == "dyn_rnn") c.dyn_rnn = std::stoi(value);
        else if (key == "prior_rnn") c.prior_rnn = std::stoi(value);
        else if (key == "dec_rnn") c.dec_rnn = std::stoi(value);
        else if (key == "dec_hidden") c.dec_hidden = std::stoi(value);
        else if (key == "action_rnn") c.action_rnn = std::stoi(value);
        else if (key == "critic_hidden") c.critic_hidden = parse_ints(value);
        else if (key == "frame_channels") c.frame_channels = std::stoi(value);
        else if (key == "frame_height") c.frame_height = std::stoi(value);
        else if (key == "frame_width") c.frame_width = std::stoi(value);
        else if (key == "checkpoint_every") c.checkpoint_every = std::stoi(value);
        else throw format_error("config: unknown key '" + key + "' in [" + section + "]");
    }
}

TrainConfig preset_smmnist_like() {
    TrainConfig c;
    c.mode = RegMode::MMD;
    c.beta1 = 5.0;
    c.beta2 = 20.0;
    c.recon = ReconKind::BernoulliCE;
    c.inner_steps = 5;
    c.lr_decoder = 5e-4;
    c.lr_encoder = 1e-4;
    c.lr_critic = 1e-4;
    return c;
}

TrainConfig preset_sprites_like() {
    TrainConfig c;
    c.mode = RegMode::MMD;
    c.beta1 = 10.0;
    c.beta2 = 60.0;
    c.recon = ReconKind::L2;
    c.inner_steps = 5;
    c.lr_decoder = 3e-4;
    c.lr_encoder = 1e-4;
    c.lr_critic = 1e-4;
    return c;
}

TrainConfig preset_mug_mmd() {
    TrainConfig c;
    c.mode = RegMode::MMD;
    c.beta1 = 10.0;
    c.beta2 = 50.0;
    c.beta3 = 50.0;
    c.n_actions = 6;
    c.recon = ReconKind::L2;
    c.inner_steps = 5;
    c.lr_decoder = 5e-4;
    c.lr_encoder = 2e-4;
    c.lr_critic = 2e-4;
    return c;
}

TrainConfig preset_mug_gan() {
    TrainConfig c = preset_mug_mmd();
    c.mode = RegMode::GAN;
    c.beta1 = 5.0;
    c.beta2 = 60.0;
    return c;
}

TrainConfig preset_by_name(const std::string& name) {
    if (name == "smmnist-like") return preset_smmnist_like();
    if (name == "sprites-like") return preset_sprites_like();
    if (name == "mug-mmd") return preset_mug_mmd();
    if (name == "mug-gan") return preset_mug_gan();
    throw config_error("unknown preset '" + name +
                       "' (expected smmnist-like|sprites-like|mug-mmd|mug-gan)");
}

double lr_schedule(int epoch, double base_lr) {
    if (epoch < 0) throw std::invalid_argument("lr_schedule: epoch must be >= 0");
    if (epoch < 50) return base_lr;
    if (epoch < 80) return base_lr / 2.0;
    return base_lr / 10.0;
}

Var recon_cost(const Var& x, const Var& xhat, ReconKind kind) {
    if (x.rows() != xhat.rows() || x.cols() != xhat.cols()) {
        throw std::invalid_argument("recon_cost: shape mismatch");
    }
    if (kind == ReconKind::L2) return sum_all(square(sub(x, xhat)));
    Var p = clamp(xhat, 1e-7, 1.0 - 1e-7);
    Var ce = add(mul(x, log(p)), mul(sub(1.0, x), log(sub(1.0, p))));
    return neg(sum_all(ce));
}

double recon_cost(const Matrix& x, const Matrix& xhat, ReconKind kind) {
    return recon_cost(Var::constant(x), Var::constant(xhat), kind).item();
}

LossGraph rwae_loss(const RWAEModel& model, const SequenceBatch& batch, const TrainConfig& cfg,
                    Rng& rng) {
    if (batch.size < 2) {
        throw std::invalid_argument("rwae_loss: batch size must be >= 2");
    }
    const Eigen::Index b = batch.size;
    const auto t_steps = static_cast<std::size_t>(batch.timesteps);
    const KernelSpec kernel = KernelSpec::mixture_rbf(cfg.bandwidths);

    std::vector<Var> frames;
    frames.reserve(t_steps);
    for (const Matrix& f : batch.frames) frames.push_back(Var::constant(f));
    std::vector<Var> feats;
    feats.reserve(t_steps);
    for (const Var& x : frames) feats.push_back(model.frame_features(x));

    // Noise draws happen in a fixed order: static eps, content prior, then per
    // step (posterior eps, prior eps), then Gumbel noise.
    GaussianParams static_post = model.encode_static(feats);
    Var z_c = reparam_sample(static_post, Var::constant(draw_normal(b, cfg.d_c, rng)));
    Var z_c_prior = Var::constant(draw_normal(b, cfg.d_c, rng));

    Var motion_pen;
    std::vector<Var> z_seq;
    z_seq.reserve(t_steps);
    Var dyn_state = model.dyn_initial_state(b);
    Var prior_state = model.prior_initial_state(b);
    Var z_prev = model.zero_motion(b);
    for (std::size_t t = 0; t < t_steps; ++t) {
        Var eps_post = Var::constant(draw_normal(b, cfg.d_m, rng));
        Var eps_prior = Var::constant(draw_normal(b, cfg.d_m, rng));
        RWAEModel::DynStep dyn = model.encode_dynamic_step(feats[t], z_prev, dyn_state);
        Var z_t = reparam_sample(dyn.post, eps_post);
        // Teacher forcing: the prior recurrence consumes the posterior history,
        // so each step compares matched conditionals.
        RWAEModel::PriorStep prior = model.prior_dynamic_step(z_prev, prior_state);
        Var z_prior_t = reparam_sample(prior.prior, eps_prior);
        Var pen_t = mmd2_unbiased(z_t, z_prior_t, kernel);
        motion_pen = motion_pen.valid() ? add(motion_pen, pen_t) : pen_t;
        z_seq.push_back(z_t);
        dyn_state = dyn.state;
        prior_state = prior.state;
        z_prev = z_t;
    }

    Var cat_kl;
    std::optional<Var> action;
    if (cfg.weak_supervision()) {
        Var logits = model.infer_action_logits(z_seq);
        Var probs = softmax_rows(logits);
        cat_kl = mean_all(categorical_kl_to_uniform_rows(probs));
        Matrix g(b, model.config().n_actions);
        for (Eigen::Index i = 0; i < g.rows(); ++i) {
            for (Eigen::Index j = 0; j < g.cols(); ++j) g(i, j) = rng.gumbel();
        }
        action = gumbel_softmax_sample(logits, cfg.tau, Var::constant(g));
    }

    Var rec;
    Var dec_state = model.decoder_initial_state(b);
    for (std::size_t t = 0; t < t_steps; ++t) {
        RWAEModel::DecodeStep step = model.decode_step(z_c, z_seq[t], action, dec_state);
        Var cost = recon_cost(frames[t], step.frame, cfg.recon);
        rec = rec.valid() ? add(rec, cost) : cost;
        dec_state = step.state;
    }
    rec = mul(rec, 1.0 / static_cast<double>(b));

    Var content = cfg.mode == RegMode::GAN ? gan_encoder_loss(z_c, model.critic)
                                           : scaled_mmd_penalty(z_c, z_c_prior, model.critic);

    Var total = add(rec, mul(content, cfg.beta1));
    total = add(total, mul(motion_pen, cfg.beta2));
    if (cat_kl.valid()) total = add(total, mul(cat_kl, cfg.beta3));

    LossGraph out;
    out.total = total;
    out.values.recon = rec.item();
    out.values.content_penalty = content.item();
    out.values.motion_penalty = motion_pen.item();
    out.values.categorical_kl = cat_kl.valid() ? cat_kl.item() : 0.0;
    out.values.total = total.item();
    if (!std::isfinite(out.values.total)) {
        std::ostringstream os;
        os << "rwae_loss: non-finite loss (recon=" << out.values.recon
           << " content=" << out.values.content_penalty
           << " motion=" << out.values.motion_penalty
           << " categorical_kl=" << out.values.categorical_kl << " total=" << out.values.total
           << ")";
        throw numeric_error(os.str());
    }
    return out;
}

Adam::Adam(double beta1, double beta2, double eps) : beta1_(beta1), beta2_(beta2), eps_(eps) {}

void Adam::step(const ParamList& params, const Gradients& grads, double lr) {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (const ParamRef& p : params) {
        if (!p.trainable) continue;
        Matrix g = grads.at(p.var).value();
        auto it = slots_.find(p.name);
        if (it == slots_.end()) {
            it = slots_
                     .emplace(p.name, std::make_pair(Matrix::Zero(g.rows(), g.cols()),
                                                     Matrix::Zero(g.rows(), g.cols())))
                     .first;
        }
        Matrix& m = it->second.first;
        Matrix& v = it->second.second;
        m = beta1_ * m + (1.0 - beta1_) * g;
        v = beta2_ * v + (1.0 - beta2_) * g.cwiseProduct(g);
        Matrix mhat = m / bc1;
        Matrix vhat = v / bc2;
        p.var.get()->value -=
            lr * mhat.cwiseQuotient(vhat.cwiseSqrt() + Matrix::Constant(g.rows(), g.cols(), eps_));
    }
}

void Adam::restore(std::map<std::string, std::pair<Matrix, Matrix>> slots, std::int64_t t) {
    slots_ = std::move(slots);
    t_ = t;
}

// --- trainer -----------------------------------------------------------------------

namespace {

TrainConfig finalize_config(TrainConfig cfg, const SequenceDataset& data) {
    data.validate();
    cfg.frame_channels = static_cast<int>(data.dims.channels);
    cfg.frame_height = static_cast<int>(data.dims.height);
    cfg.frame_width = static_cast<int>(data.dims.width);
    cfg.validate();
    if (data.dims.count < cfg.batch_size) {
        throw std::invalid_argument("Trainer: dataset smaller than one batch");
    }
    return cfg;
}

} // namespace

Trainer::Trainer(const SequenceDataset& data, TrainConfig cfg)
    : data_(data),
      cfg_(finalize_config(std::move(cfg), data)),
      rng_(cfg_.seed),
      model_(cfg_.model_config(), rng_),
      opt_encoder_(cfg_.adam_beta1, cfg_.adam_beta2),
      opt_decoder_(cfg_.adam_beta1, cfg_.adam_beta2),
      opt_critic_(cfg_.adam_beta1, cfg_.adam_beta2) {}

Trainer::Trainer(const SequenceDataset& data, const Checkpoint& resume)
    : data_(data),
      cfg_(finalize_config(resume.config, data)),
      rng_(cfg_.seed),
      model_(cfg_.model_config(), rng_),
      opt_encoder_(cfg_.adam_beta1, cfg_.adam_beta2),
      opt_decoder_(cfg_.adam_beta1, cfg_.adam_beta2),
      opt_critic_(cfg_.adam_beta1, cfg_.adam_beta2) {
    if (resume.config.frame_channels != static_cast<int>(data.dims.channels) ||
        resume.config.frame_height != static_cast<int>(data.dims.height) ||
        resume.config.frame_width != static_cast<int>(data.dims.width)) {
        throw config_error("resume: dataset frame geometry differs from the checkpoint");
    }

    ParamList params = model_.all_params();
    std::size_t used = 0;
    for (const ParamRef& p : params) {
        auto it = resume.arrays.find("param/" + p.name);
        if (it == resume.arrays.end()) {
            throw format_error("checkpoint missing parameter '" + p.name + "'");
        }
        if (it->second.rows() != p.var.rows() || it->second.cols() != p.var.cols()) {
            throw format_error("checkpoint parameter '" + p.name + "' has wrong shape");
        }
        p.var.get()->value = it->second;
        ++used;
    }

    auto restore_opt = [&](Adam& opt, const std::string& tag) {
        std::map<std::string, std::pair<Matrix, Matrix>> slots;
        const std::string mp = "adam/" + tag + "/m/";
        const std::string vp = "adam/" + tag + "/v/";
        for (const auto& [name, arr] : resume.arrays) {
            if (name.rfind(mp, 0) == 0) {
                slots[name.substr(mp.size())].first = arr;
                ++used;
            } else if (name.rfind(vp, 0) == 0) {
                slots[name.substr(vp.size())].second = arr;
                ++used;
            }
        }
        auto it = resume.scalars.find("adam/" + tag + "/t");
        if (it == resume.scalars.end()) {
            throw format_error("checkpoint missing optimizer step count for " + tag);
        }
        opt.restore(std::move(slots), it->second);
    };
    restore_opt(opt_encoder_, "encoder");
    restore_opt(opt_decoder_, "decoder");
    restore_opt(opt_critic_, "critic");
    if (used != resume.arrays.size()) {
        throw format_error("checkpoint contains arrays unknown to this model");
    }

    auto scalar = [&](const std::string& name) {
        auto it = resume.scalars.find(name);
        if (it == resume.scalars.end()) {
            throw format_error("checkpoint missing scalar '" + name + "'");
        }
        return it->second;
    };
    epoch_ = static_cast<int>(scalar("epoch"));
    outer_step_ = scalar("outer_step");
    counters_.critic_updates = scalar("critic_updates");
    counters_.encoder_updates = scalar("encoder_updates");
    counters_.decoder_updates = scalar("decoder_updates");
    rng_ = Rng::deserialize(resume.rng_state);
}

void Trainer::check_params_finite() const {
    for (const ParamRef& p : model_.all_params()) {
        if (!p.var.value().allFinite()) {
            throw numeric_error("parameter '" + p.name + "' became non-finite after an update");
        }
    }
}

void Trainer::critic_update(const SequenceBatch& batch) {
    const Eigen::Index b = batch.size;
    std::vector<Var> feats;
    feats.reserve(batch.frames.size());
    for (const Matrix& f : batch.frames) {
        feats.push_back(model_.frame_features(Var::constant(f)));
    }
    GaussianParams post = model_.encode_static(feats);
    Var eps = Var::constant(draw_normal(b, cfg_.d_c, rng_));
    Var z_post = detach(reparam_sample(post, eps));
    Var z_prior = Var::constant(draw_normal(b, cfg_.d_c, rng_));

    model_.critic.power_iterate();
    Var loss;
    if (cfg_.mode == RegMode::MMD) {
        // The feature map ascends the scaled MMD.
        loss = neg(scaled_mmd_penalty(z_post, z_prior, model_.critic));
    } else {
        Matrix alphas(b, 1);
        for (Eigen::Index i = 0; i < b; ++i) alphas(i, 0) = rng_.uniform();
        loss = gan_discriminator_loss(z_prior, z_post, model_.critic, cfg_.lambda_gp, alphas);
    }
    Gradients grads = backward(loss);
    opt_critic_.step(model_.critic_params(), grads, lr_schedule(epoch_, cfg_.lr_critic));
    ++counters_.critic_updates;
}

void Trainer::encoder_update(const SequenceBatch& batch) {
    LossGraph loss = rwae_loss(model_, batch, cfg_, rng_);
    Gradients grads = backward(loss.total);
    opt_encoder_.step(model_.encoder_params(), grads, lr_schedule(epoch_, cfg_.lr_encoder));
    ++counters_.encoder_updates;
}

void Trainer::outer_update(const SequenceBatch& batch) {
    LossGraph loss = rwae_loss(model_, batch, cfg_, rng_);
    Gradients grads = backward(loss.total);
    ParamList dec = model_.decoder_params();
    ParamList prior = model_.prior_params();
    dec.insert(dec.end(), prior.begin(), prior.end());
    opt_decoder_.step(dec, grads, lr_schedule(epoch_, cfg_.lr_decoder));
    ++counters_.decoder_updates;
    ++outer_step_;
    check_params_finite();

    OuterRecord rec;
    rec.step = outer_step_;
    rec.epoch = epoch_;
    rec.loss = loss.values;
    rec.lr_decoder = lr_schedule(epoch_, cfg_.lr_decoder);
    rec.lr_encoder = lr_schedule(epoch_, cfg_.lr_encoder);
    rec.lr_critic = lr_schedule(epoch_, cfg_.lr_critic);
    outer_records_.push_back(rec);
    if (trace) {
        write_trace_header();
        write_trace_record(*trace, rec);
    }
    if (on_outer_step) on_outer_step(rec);
}

void Trainer::write_trace_header() {
    if (wrote_trace_header_ || !trace) return;
    *trace << "# step epoch recon content_penalty motion_penalty categorical_kl total"
              " lr_decoder lr_encoder lr_critic\n";
    wrote_trace_header_ = true;
}

void write_trace_record(std::ostream& os, const OuterRecord& r) {
    os << r.step << ' ' << r.epoch << ' ' << std::setprecision(17) << r.loss.recon << ' '
       << r.loss.content_penalty << ' ' << r.loss.motion_penalty << ' ' << r.loss.categorical_kl
       << ' ' << r.loss.total << ' ' << r.lr_decoder << ' ' << r.lr_encoder << ' ' << r.lr_critic
       << '\n';
    os.flush();
}

EpochStats Trainer::run_epoch() {
    const std::size_t first_record = outer_records_.size();
    auto index_batches = epoch_index_batches(data_.dims.count, cfg_.batch_size, rng_);
    const std::size_t groups = index_batches.size() / static_cast<std::size_t>(cfg_.inner_steps);
    if (groups == 0) {
        throw config_error("Trainer: " + std::to_string(index_batches.size()) +
                           " batches per epoch cannot fill one group of inner_steps=" +
                           std::to_string(cfg_.inner_steps) +
                           "; no decoder update would ever run");
    }
    for (std::size_t g = 0; g < groups; ++g) {
        SequenceBatch batch;
        for (int i = 0; i < cfg_.inner_steps; ++i) {
            const auto& idx = index_batches[g * static_cast<std::size_t>(cfg_.inner_steps) +
                                            static_cast<std::size_t>(i)];
            batch = make_batch(data_, idx);
            critic_update(batch);
            encoder_update(batch);
        }
        outer_update(batch);
    }
    EpochStats stats;
    stats.epoch = epoch_;
    for (std::size_t i = first_record; i < outer_records_.size(); ++i) {
        stats.mean_recon += outer_records_[i].loss.recon;
        stats.mean_total += outer_records_[i].loss.total;
        ++stats.outer_steps;
    }
    if (stats.outer_steps > 0) {
        stats.mean_recon /= static_cast<double>(stats.outer_steps);
        stats.mean_total /= static_cast<double>(stats.outer_steps);
    }
    epoch_stats_.push_back(stats);
    ++epoch_;
    return stats;
}

void Trainer::run() {
    namespace fs = std::filesystem;
    while (epoch_ < cfg_.epochs) {
        run_epoch();
        if (!checkpoint_dir.empty() && cfg_.checkpoint_every > 0 &&
            epoch_ % cfg_.checkpoint_every == 0 && epoch_ < cfg_.epochs) {
            save_checkpoint(make_checkpoint(), (fs::path(checkpoint_dir) /
                                                ("ckpt_epoch_" + std::to_string(epoch_) + ".rwae"))
                                                   .string());
        }
    }
    if (!checkpoint_dir.empty()) {
        save_checkpoint(make_checkpoint(),
                        (fs::path(checkpoint_dir) / "ckpt_final.rwae").string());
    }
}

RWAEModel build_model_from_checkpoint(const Checkpoint& ck) {
    Rng rng(ck.config.seed);
    RWAEModel model(ck.config.model_config(), rng);
    for (const ParamRef& p : model.all_params()) {
        auto it = ck.arrays.find("param/" + p.name);
        if (it == ck.arrays.end()) {
            throw format_error("checkpoint missing parameter '" + p.name + "'");
        }
        if (it->second.rows() != p.var.rows() || it->second.cols() != p.var.cols()) {
            throw format_error("checkpoint parameter '" + p.name + "' has wrong shape");
        }
        p.var.get()->value = it->second;
    }
    return model;
}

Checkpoint Trainer::make_checkpoint() const {
    Checkpoint ck;
    ck.config = cfg_;
    for (const ParamRef& p : model_.all_params()) {
        ck.arrays["param/" + p.name] = p.var.value();
    }
    auto dump_opt = [&](const Adam& opt, const std::string& tag) {
        for (const auto& [name, mv] : opt.slots()) {
            ck.arrays["adam/" + tag + "/m/" + name] = mv.first;
            ck.arrays["adam/" + tag + "/v/" + name] = mv.second;
        }
        ck.scalars["adam/" + tag + "/t"] = opt.steps();
    };
    dump_opt(opt_encoder_, "encoder");
    dump_opt(opt_decoder_, "decoder");
    dump_opt(opt_critic_, "critic");
    ck.scalars["epoch"] = epoch_;
    ck.scalars["outer_step"] = outer_step_;
    ck.scalars["critic_updates"] = counters_.critic_updates;
    ck.scalars["encoder_updates"] = counters_.encoder_updates;
    ck.scalars["decoder_updates"] = counters_.decoder_updates;
    ck.rng_state = rng_.serialize();
    return ck;
}

} // namespace rwae
