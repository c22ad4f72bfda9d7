#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rwae/dataset.hpp"
#include "rwae/model.hpp"
#include "rwae/nn.hpp"

namespace rwae {

// Cosine-similarity scores for identity-verification trials.
struct ScorePairSet {
    std::vector<double> same_scores;
    std::vector<double> diff_scores;
};

// Sweeps the decision threshold (accept when score > threshold) over every
// distinct score value and returns (FRR + FAR) / 2 at the threshold that
// minimizes |FRR - FAR|.
double equal_error_rate(const ScorePairSet& s);

// A finite joint of data distribution p_x, encoder rows q(z|x), and prior p_z.
struct DiscreteJoint {
    Eigen::VectorXd p_x;
    Matrix q_z_given_x; // |X| x |Z|, row-stochastic
    Eigen::VectorXd p_z;

    void validate() const;
};

struct MiBoundsReport {
    double lhs;         // KL(Q(Z) || P(Z))
    double expected_kl; // E_x[KL(q(.|x) || P(Z))]
    double mi;          // I(X; Z) under the inference model
    double rhs;         // expected_kl - mi
    double gap;         // lhs - rhs
};

// Exact enumeration of the aggregated-posterior identity
//   KL(Q(Z)||P(Z)) = E_x[KL(q(.|x)||P(Z))] - I(X;Z).
MiBoundsReport verify_mi_bounds_discrete(const DiscreteJoint& j);

// --- model-based evaluations (all deterministic via posterior means) -----------

// Encodes with posterior means and decodes; frames returned as T x frame_dim.
Matrix reconstruct_sequence(const RWAEModel& model, const Matrix& seq);

struct SwapPair {
    Matrix x_ab; // content of A, motion of B
    Matrix x_ba; // content of B, motion of A
};
SwapPair swap_generate(const RWAEModel& model, const Matrix& seq_a, const Matrix& seq_b);

// Group-averaged latent features: mu_c over static posterior means, mu_m over
// per-step dynamic posterior means. One row per group.
struct IdentityFeatures {
    Matrix mu_c;
    Matrix mu_m;
};
IdentityFeatures latent_identity_features(const RWAEModel& model, const SequenceDataset& data,
                                          const std::vector<std::vector<std::int64_t>>& groups);

// Per-pixel mean squared reconstruction error over a dataset.
double reconstruction_mse(const RWAEModel& model, const SequenceDataset& data);

// Small fully-connected frame classifier used as the oracle for the
// swap-based disentanglement error.
class FrameClassifier {
public:
    FrameClassifier(int frame_dim, int n_classes, std::vector<int> hidden, std::uint64_t seed);

    void fit(const SequenceDataset& data, int epochs, int batch_size, double lr);
    double accuracy(const SequenceDataset& data) const;
    // Mean class probabilities over the frames of one sequence (T x frame_dim).
    Eigen::VectorXd sequence_probs(const Matrix& seq) const;
    int n_classes() const { return n_classes_; }

private:
    int n_classes_;
    Rng rng_;
    MLP net_;
};

// Fixes each test sequence's content code, resamples the motion rollout from
// the learned prior, decodes, and classifies the generated content. Returns
// the error percentage (100 - accuracy). Throws config_error when the
// classifier's real-frame accuracy is below `classifier_gate`.
double swap_disentanglement_error(const RWAEModel& model, const SequenceDataset& test,
                                  const FrameClassifier& clf, Rng& rng,
                                  double classifier_gate = 0.95);

// Accuracy of argmax infer_action against motion labels, maximized over label
// permutations (the action variable is unsupervised, so its category order is
// arbitrary).
double action_accuracy(const RWAEModel& model, const SequenceDataset& test);

// Cosine-similarity verification trials over all sequence pairs, same/diff
// split by shape identity, for content (mu_c) and motion (mu_m) features.
struct EerScores {
    ScorePairSet content;
    ScorePairSet motion;
};
EerScores identity_verification_scores(const RWAEModel& model, const SequenceDataset& data);

// --- evaluation report -----------------------------------------------------------

struct MetricRecord {
    std::string name;
    double value;
    std::int64_t sample_count;
};

std::string fnv1a_hex(const std::string& s);
void write_eval_report(const std::string& path, const std::vector<MetricRecord>& records,
                       const std::string& config_hash);

} // namespace rwae
