#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "rwae/dataset.hpp"
#include "rwae/divergences.hpp"
#include "rwae/kv.hpp"
#include "rwae/model.hpp"

namespace rwae {

enum class RegMode { MMD, GAN };
enum class ReconKind { L2, BernoulliCE };

std::string to_string(RegMode m);
std::string to_string(ReconKind k);
RegMode parse_reg_mode(const std::string& s);
ReconKind parse_recon_kind(const std::string& s);

struct TrainConfig {
    RegMode mode = RegMode::MMD;
    double beta1 = 5.0;      // content-penalty weight
    double beta2 = 20.0;     // motion-penalty weight
    double beta3 = 0.0;      // categorical-KL weight; 0 disables weak supervision
    double lambda_gp = 10.0; // GAN gradient-penalty coefficient
    int inner_steps = 5;     // L critic/encoder updates per decoder/prior update
    double tau = 1.0;        // Gumbel-softmax temperature
    ReconKind recon = ReconKind::BernoulliCE;
    double lr_decoder = 5e-4;
    double lr_encoder = 1e-4;
    double lr_critic = 1e-4;
    double adam_beta1 = 0.5;
    double adam_beta2 = 0.9;
    int epochs = 100;
    int batch_size = 32;
    int d_c = 16;
    int d_m = 4;
    int n_actions = 0;
    std::vector<double> bandwidths = {1.0, 2.0, 4.0, 8.0, 16.0};
    std::uint64_t seed = 1;
    bool spectral = false;

    // Network widths (desk-scale replacements for the full-size stacks).
    int feat_hidden = 128;
    int feat_dim = 64;
    int enc_rnn = 64;
    int dyn_rnn = 32;
    int prior_rnn = 32;
    int dec_rnn = 128;
    int dec_hidden = 256;
    int action_rnn = 16;
    std::vector<int> critic_hidden = {64, 64};

    // Frame geometry; filled in from the dataset before the model is built.
    int frame_channels = 0;
    int frame_height = 0;
    int frame_width = 0;

    int checkpoint_every = 0; // epochs between periodic checkpoints; 0 = final only

    void validate() const;
    bool weak_supervision() const { return beta3 > 0.0 && n_actions > 0; }
    int frame_dim() const { return frame_channels * frame_height * frame_width; }
    ModelConfig model_config() const;

    void to_kv(KvFile& kv, const std::string& section = "train") const;
    static TrainConfig from_kv(const KvFile& kv, const std::string& section = "train");
    // Applies only the keys present in the section onto an existing config,
    // so a file can override an expanded preset without restating everything.
    static void apply_kv(TrainConfig& c, const KvFile& kv, const std::string& section = "train");
};

// Named presets with the published penalty weights, reconstruction costs and
// learning rates; see the preset tests for the asserted values.
TrainConfig preset_smmnist_like();
TrainConfig preset_sprites_like();
TrainConfig preset_mug_mmd();
TrainConfig preset_mug_gan();
TrainConfig preset_by_name(const std::string& name);

// Step decay: base for epoch < 50, base/2 for 50 <= epoch < 80, base/10 after.
double lr_schedule(int epoch, double base_lr);

// Per-frame reconstruction cost, summed over entries.
// L2: sum (x - xhat)^2. BernoulliCE: -sum[x log xhat + (1-x) log(1-xhat)] with
// xhat clamped to [1e-7, 1 - 1e-7].
Var recon_cost(const Var& x, const Var& xhat, ReconKind kind);
double recon_cost(const Matrix& x, const Matrix& xhat, ReconKind kind);

struct LossBreakdown {
    double recon = 0.0;
    double content_penalty = 0.0;
    double motion_penalty = 0.0;
    double categorical_kl = 0.0;
    double total = 0.0;
};

struct LossGraph {
    Var total;
    LossBreakdown values;
};

// Full objective on one batch: batch-mean reconstruction summed over time,
// plus the content penalty (scaled MMD or adversarial encoder loss), the
// per-step motion MMD against a teacher-forced prior rollout, and the
// categorical KL when weak supervision is active.
LossGraph rwae_loss(const RWAEModel& model, const SequenceBatch& batch, const TrainConfig& cfg,
                    Rng& rng);

class Adam {
public:
    Adam() = default;
    Adam(double beta1, double beta2, double eps = 1e-8);

    void step(const ParamList& params, const Gradients& grads, double lr);

    std::int64_t steps() const { return t_; }

    // Checkpoint access.
    const std::map<std::string, std::pair<Matrix, Matrix>>& slots() const { return slots_; }
    void restore(std::map<std::string, std::pair<Matrix, Matrix>> slots, std::int64_t t);

private:
    double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
    std::int64_t t_ = 0;
    std::map<std::string, std::pair<Matrix, Matrix>> slots_;
};

struct TrainCounters {
    std::int64_t critic_updates = 0;
    std::int64_t encoder_updates = 0;
    std::int64_t decoder_updates = 0;
};

struct OuterRecord {
    std::int64_t step = 0;
    int epoch = 0;
    LossBreakdown loss;
    double lr_decoder = 0, lr_encoder = 0, lr_critic = 0;
};

struct EpochStats {
    int epoch = 0;
    double mean_recon = 0.0;
    double mean_total = 0.0;
    std::int64_t outer_steps = 0;
};

struct Checkpoint {
    std::uint32_t version = 1;
    TrainConfig config;
    std::map<std::string, Matrix> arrays;
    std::map<std::string, std::int64_t> scalars;
    std::string rng_state;
};

void save_checkpoint(const Checkpoint& ck, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// Rebuilds the model from a checkpoint's config and parameter arrays
// (optimizer state is ignored). For evaluation and generation.
RWAEModel build_model_from_checkpoint(const Checkpoint& ck);

// Alternating optimization: per group of L batches, L critic+encoder inner
// updates followed by one decoder+prior outer update on the last batch.
class Trainer {
public:
    Trainer(const SequenceDataset& data, TrainConfig cfg);
    Trainer(const SequenceDataset& data, const Checkpoint& resume);

    // Runs the remaining epochs (cfg.epochs total across resumes).
    void run();
    // Runs exactly one epoch; returns its stats.
    EpochStats run_epoch();

    RWAEModel& model() { return model_; }
    const RWAEModel& model() const { return model_; }
    const TrainConfig& config() const { return cfg_; }
    const TrainCounters& counters() const { return counters_; }
    const std::vector<EpochStats>& epoch_stats() const { return epoch_stats_; }
    const std::vector<OuterRecord>& outer_records() const { return outer_records_; }
    int epoch() const { return epoch_; }

    Checkpoint make_checkpoint() const;

    // Optional hooks.
    std::function<void(const OuterRecord&)> on_outer_step;
    std::ostream* trace = nullptr;          // loss trace target
    std::string checkpoint_dir;             // periodic checkpoints when non-empty

private:
    void init_model();
    void critic_update(const SequenceBatch& batch);
    void encoder_update(const SequenceBatch& batch);
    void outer_update(const SequenceBatch& batch);
    void check_params_finite() const;
    void write_trace_header();

    const SequenceDataset& data_;
    TrainConfig cfg_;
    Rng rng_;
    RWAEModel model_;
    Adam opt_encoder_, opt_decoder_, opt_critic_;
    TrainCounters counters_;
    std::vector<EpochStats> epoch_stats_;
    std::vector<OuterRecord> outer_records_;
    int epoch_ = 0;
    std::int64_t outer_step_ = 0;
    bool wrote_trace_header_ = false;
};

// Writes the loss-trace record line for one outer step.
void write_trace_record(std::ostream& os, const OuterRecord& r);

} // namespace rwae
