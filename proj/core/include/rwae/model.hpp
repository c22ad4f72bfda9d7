#pragma once

#include <optional>
#include <vector>

#include "rwae/divergences.hpp"
#include "rwae/graph.hpp"
#include "rwae/nn.hpp"
#include "rwae/rng.hpp"

namespace rwae {

// Batched diagonal-Gaussian parameters (B x d each). log_var is clamped to
// [-10, 10] by every head that produces one.
struct GaussianParams {
    Var mean;
    Var log_var;
};

// mean + exp(log_var / 2) * eps, elementwise. eps must match mean's shape.
Var reparam_sample(const GaussianParams& p, const Var& eps);

// Relaxed categorical sample: softmax((log_alpha + g) / tau) per row.
// log_alpha may be unnormalized logits (the softmax is shift-invariant).
Var gumbel_softmax_sample(const Var& log_alpha, double tau, const Var& g);
Matrix gumbel_softmax_sample(const Matrix& log_alpha, double tau, const Matrix& g);

// KL(alpha || uniform) = sum_j alpha_j log(alpha_j * A), with 0 log 0 = 0.
// Validates that the input lies on the simplex (tolerance 1e-6).
double categorical_kl_to_uniform(const Eigen::VectorXd& class_probs);
// Graph variant over rows of a B x A matrix -> B x 1. Assumes strictly
// positive rows (softmax output).
Var categorical_kl_to_uniform_rows(const Var& probs);

struct ModelConfig {
    int frame_dim = 0; // flattened C*H*W
    int d_c = 16;
    int d_m = 4;
    int n_actions = 0; // 0 disables the weakly-supervised action variable

    int feat_hidden = 128;
    int feat_dim = 64;
    int enc_rnn = 64;
    int dyn_rnn = 32;
    int prior_rnn = 32;
    int dec_rnn = 128;
    int dec_hidden = 256;
    int action_rnn = 16;
    std::vector<int> critic_hidden = {64, 64};
    bool spectral = false;

    void validate() const;
};

// Deterministic encoding of one sequence (or a batch of sequences) computed
// with posterior means or reparameterized samples; see encode_sequence.
struct SequenceEncoding {
    GaussianParams static_post;
    Var z_c;                              // B x d_c
    std::vector<GaussianParams> dyn_post; // T entries
    std::vector<Var> z_m;                 // T entries, B x d_m
};

// The sequential generative/inference model: recurrent Gaussian encoders for
// the static and dynamic codes, a learned recurrent Gaussian prior over the
// dynamic code, a deterministic recurrent decoder, an optional categorical
// action head, and the latent-space critic.
class RWAEModel {
public:
    RWAEModel(const ModelConfig& cfg, Rng& rng);

    const ModelConfig& config() const { return cfg_; }
    bool has_actions() const { return cfg_.n_actions > 0; }

    // Shared per-frame feature extractor h_t.
    Var frame_features(const Var& frames) const;

    // Static posterior from the whole sequence of frame features.
    GaussianParams encode_static(const std::vector<Var>& feats) const;

    // Dynamic posterior step. The state is a recurrence over (h_t, z^m_{t-1})
    // pairs; pass the previously sampled motion code as z_prev (zeros at t=1).
    struct DynStep {
        GaussianParams post;
        Var state;
    };
    Var dyn_initial_state(Eigen::Index batch) const;
    DynStep encode_dynamic_step(const Var& feat, const Var& z_prev, const Var& state) const;

    // Learned prior over motion codes. At t=1, z_prev is the zero vector and
    // the state is the initial state, making P(Z_1^m) input-independent.
    struct PriorStep {
        GaussianParams prior;
        Var state;
    };
    Var prior_initial_state(Eigen::Index batch) const;
    PriorStep prior_dynamic_step(const Var& z_prev, const Var& state) const;

    // Deterministic decoder step; action must be valid iff has_actions().
    struct DecodeStep {
        Var frame; // B x frame_dim, sigmoid range
        Var state;
    };
    Var decoder_initial_state(Eigen::Index batch) const;
    DecodeStep decode_step(const Var& z_c, const Var& z_m, const std::optional<Var>& action,
                           const Var& state) const;

    // Class probabilities of the action variable from a motion-code sequence.
    Var infer_action(const std::vector<Var>& z_m_seq) const;
    Var infer_action_logits(const std::vector<Var>& z_m_seq) const;

    Var zero_motion(Eigen::Index batch) const;

    // Full-sequence helpers.
    // noise == nullptr uses posterior means throughout (deterministic).
    SequenceEncoding encode_sequence(const std::vector<Var>& frames, Rng* noise) const;
    std::vector<Var> decode_sequence(const Var& z_c, const std::vector<Var>& z_m,
                                     const std::optional<Var>& action) const;
    // Unconditional motion rollout of T steps from the learned prior.
    std::vector<Var> prior_rollout(Eigen::Index batch, int timesteps, Rng& noise) const;

    // Parameter groups: phi (encoders), psi (prior), theta (decoder),
    // gamma (critic).
    ParamList encoder_params() const;
    ParamList prior_params() const;
    ParamList decoder_params() const;
    ParamList critic_params() const;
    ParamList all_params() const;

    Critic critic;

private:
    GaussianParams gaussian_head(const Var& h, const Linear& mean, const Linear& log_var) const;

    ModelConfig cfg_;
    MLP feature_;
    GRUCell static_rnn_;
    Linear static_mean_, static_logvar_;
    GRUCell dyn_rnn_;
    Linear dyn_mean_, dyn_logvar_;
    GRUCell prior_rnn_;
    Linear prior_mean_, prior_logvar_;
    Linear dec_in_;
    GRUCell dec_rnn_;
    MLP dec_out_;
    GRUCell action_rnn_;
    Linear action_head_;
};

} // namespace rwae
