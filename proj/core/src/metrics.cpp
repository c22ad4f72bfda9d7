#include "rwae/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>

#include "rwae/errors.hpp"
#include "rwae/train.hpp"

namespace rwae {

double equal_error_rate(const ScorePairSet& s) {
    if (s.same_scores.empty() || s.diff_scores.empty()) {
        throw std::invalid_argument("equal_error_rate: both score lists must be non-empty");
    }
    std::vector<double> same = s.same_scores;
    std::vector<double> diff = s.diff_scores;
    std::sort(same.begin(), same.end());
    std::sort(diff.begin(), diff.end());

    std::set<double> thresholds(same.begin(), same.end());
    thresholds.insert(diff.begin(), diff.end());

    const double n_same = static_cast<double>(same.size());
    const double n_diff = static_cast<double>(diff.size());
    double best_gap = std::numeric_limits<double>::infinity();
    double best_rate = 0.5;
    for (double th : thresholds) {
        // Accept when score > th.
        const auto rejected =
            std::upper_bound(same.begin(), same.end(), th) - same.begin();
        const auto accepted =
            diff.end() - std::upper_bound(diff.begin(), diff.end(), th);
        const double frr = static_cast<double>(rejected) / n_same;
        const double far = static_cast<double>(accepted) / n_diff;
        const double gap = std::abs(frr - far);
        if (gap < best_gap) {
            best_gap = gap;
            best_rate = 0.5 * (frr + far);
        }
    }
    return best_rate;
}

void DiscreteJoint::validate() const {
    const Eigen::Index nx = p_x.size();
    const Eigen::Index nz = p_z.size();
    if (nx < 1 || nz < 1 || q_z_given_x.rows() != nx || q_z_given_x.cols() != nz) {
        throw std::invalid_argument("DiscreteJoint: inconsistent dimensions");
    }
    auto check_dist = [](const Eigen::VectorXd& p, const char* what) {
        double sum = 0.0;
        for (Eigen::Index i = 0; i < p.size(); ++i) {
            if (p(i) < 0.0) throw std::invalid_argument(std::string(what) + ": negative entry");
            sum += p(i);
        }
        if (std::abs(sum - 1.0) > 1e-12) {
            throw std::invalid_argument(std::string(what) + ": does not sum to 1");
        }
    };
    check_dist(p_x, "DiscreteJoint: p_x");
    check_dist(p_z, "DiscreteJoint: p_z");
    for (Eigen::Index i = 0; i < nx; ++i) {
        check_dist(q_z_given_x.row(i).transpose(), "DiscreteJoint: q(z|x) row");
    }
    // Support condition: the prior must cover everything the encoder can emit.
    for (Eigen::Index j = 0; j < nz; ++j) {
        if (p_z(j) > 0.0) continue;
        for (Eigen::Index i = 0; i < nx; ++i) {
            if (p_x(i) > 0.0 && q_z_given_x(i, j) > 0.0) {
                throw std::invalid_argument(
                    "DiscreteJoint: encoder places mass where the prior has none");
            }
        }
    }
}

MiBoundsReport verify_mi_bounds_discrete(const DiscreteJoint& j) {
    j.validate();
    const Eigen::Index nx = j.p_x.size();
    const Eigen::Index nz = j.p_z.size();

    Eigen::VectorXd q_z = Eigen::VectorXd::Zero(nz);
    for (Eigen::Index i = 0; i < nx; ++i) {
        q_z += j.p_x(i) * j.q_z_given_x.row(i).transpose();
    }

    double lhs = 0.0; // KL(Q(Z) || P(Z))
    for (Eigen::Index z = 0; z < nz; ++z) {
        if (q_z(z) > 0.0) lhs += q_z(z) * std::log(q_z(z) / j.p_z(z));
    }

    double expected_kl = 0.0; // E_x KL(q(.|x) || P(Z))
    double mi = 0.0;          // I(X;Z)
    for (Eigen::Index x = 0; x < nx; ++x) {
        if (j.p_x(x) == 0.0) continue;
        for (Eigen::Index z = 0; z < nz; ++z) {
            const double q = j.q_z_given_x(x, z);
            if (q == 0.0) continue;
            expected_kl += j.p_x(x) * q * std::log(q / j.p_z(z));
            mi += j.p_x(x) * q * std::log(q / q_z(z));
        }
    }

    MiBoundsReport r;
    r.lhs = lhs;
    r.expected_kl = expected_kl;
    r.mi = mi;
    r.rhs = expected_kl - mi;
    r.gap = lhs - r.rhs;
    return r;
}

// --- model-based evaluations --------------------------------------------------------

namespace {

std::vector<Var> sequence_frames(const Matrix& seq) {
    std::vector<Var> out;
    out.reserve(static_cast<std::size_t>(seq.rows()));
    for (Eigen::Index t = 0; t < seq.rows(); ++t) {
        out.push_back(Var::constant(seq.row(t)));
    }
    return out;
}

Matrix stack_frames(const std::vector<Var>& frames) {
    Matrix out(static_cast<Eigen::Index>(frames.size()), frames[0].cols());
    for (std::size_t t = 0; t < frames.size(); ++t) {
        out.row(static_cast<Eigen::Index>(t)) = frames[t].value();
    }
    return out;
}

// Deterministic relaxed action inferred from a motion sequence.
std::optional<Var> action_from_motion(const RWAEModel& model, const std::vector<Var>& z_m) {
    if (!model.has_actions()) return std::nullopt;
    return model.infer_action(z_m);
}

} // namespace

Matrix reconstruct_sequence(const RWAEModel& model, const Matrix& seq) {
    SequenceEncoding enc = model.encode_sequence(sequence_frames(seq), nullptr);
    return stack_frames(
        model.decode_sequence(enc.z_c, enc.z_m, action_from_motion(model, enc.z_m)));
}

SwapPair swap_generate(const RWAEModel& model, const Matrix& seq_a, const Matrix& seq_b) {
    if (seq_a.rows() != seq_b.rows() || seq_a.cols() != seq_b.cols()) {
        throw std::invalid_argument("swap_generate: sequences must share length and frame size");
    }
    SequenceEncoding a = model.encode_sequence(sequence_frames(seq_a), nullptr);
    SequenceEncoding b = model.encode_sequence(sequence_frames(seq_b), nullptr);
    // The action variable travels with the motion donor.
    SwapPair out;
    out.x_ab = stack_frames(model.decode_sequence(a.z_c, b.z_m, action_from_motion(model, b.z_m)));
    out.x_ba = stack_frames(model.decode_sequence(b.z_c, a.z_m, action_from_motion(model, a.z_m)));
    return out;
}

IdentityFeatures latent_identity_features(const RWAEModel& model, const SequenceDataset& data,
                                          const std::vector<std::vector<std::int64_t>>& groups) {
    const int d_c = model.config().d_c;
    const int d_m = model.config().d_m;
    IdentityFeatures out;
    out.mu_c = Matrix::Zero(static_cast<Eigen::Index>(groups.size()), d_c);
    out.mu_m = Matrix::Zero(static_cast<Eigen::Index>(groups.size()), d_m);
    for (std::size_t g = 0; g < groups.size(); ++g) {
        if (groups[g].empty()) {
            throw std::invalid_argument("latent_identity_features: empty group");
        }
        Eigen::RowVectorXd mc = Eigen::RowVectorXd::Zero(d_c);
        Eigen::RowVectorXd mm = Eigen::RowVectorXd::Zero(d_m);
        for (std::int64_t idx : groups[g]) {
            SequenceEncoding enc =
                model.encode_sequence(sequence_frames(data.sequence(idx)), nullptr);
            mc += enc.static_post.mean.value().row(0);
            Eigen::RowVectorXd seq_mean = Eigen::RowVectorXd::Zero(d_m);
            for (const GaussianParams& p : enc.dyn_post) seq_mean += p.mean.value().row(0);
            mm += seq_mean / static_cast<double>(enc.dyn_post.size());
        }
        out.mu_c.row(static_cast<Eigen::Index>(g)) = mc / static_cast<double>(groups[g].size());
        out.mu_m.row(static_cast<Eigen::Index>(g)) = mm / static_cast<double>(groups[g].size());
    }
    return out;
}

double reconstruction_mse(const RWAEModel& model, const SequenceDataset& data) {
    double acc = 0.0;
    for (std::int64_t i = 0; i < data.dims.count; ++i) {
        Matrix x = data.sequence(i);
        Matrix xhat = reconstruct_sequence(model, x);
        acc += (x - xhat).squaredNorm() / static_cast<double>(x.size());
    }
    return acc / static_cast<double>(data.dims.count);
}

// --- frame classifier ------------------------------------------------------------------

FrameClassifier::FrameClassifier(int frame_dim, int n_classes, std::vector<int> hidden,
                                 std::uint64_t seed)
    : n_classes_(n_classes), rng_(seed) {
    if (n_classes < 2) throw std::invalid_argument("FrameClassifier: need >= 2 classes");
    net_ = MLP(frame_dim, hidden, n_classes, Act::Relu, Act::None, rng_);
}

void FrameClassifier::fit(const SequenceDataset& data, int epochs, int batch_size, double lr) {
    if (!data.labeled) throw std::invalid_argument("FrameClassifier::fit: labeled data required");
    Adam opt(0.9, 0.999);
    ParamList params;
    net_.collect("clf", params);

    const std::int64_t n_frames = data.dims.count * data.dims.timesteps;
    std::vector<std::int64_t> order(static_cast<std::size_t>(n_frames));
    std::iota(order.begin(), order.end(), 0);
    for (int e = 0; e < epochs; ++e) {
        rng_.shuffle(order);
        for (std::int64_t at = 0; at + batch_size <= n_frames; at += batch_size) {
            Matrix x(batch_size, data.dims.frame_dim());
            Matrix onehot = Matrix::Zero(batch_size, n_classes_);
            for (int r = 0; r < batch_size; ++r) {
                const std::int64_t f = order[static_cast<std::size_t>(at + r)];
                const std::int64_t seq = f / data.dims.timesteps;
                const std::int64_t t = f % data.dims.timesteps;
                const float* p = data.frame_ptr(seq, t);
                for (std::int64_t j = 0; j < data.dims.frame_dim(); ++j) x(r, j) = p[j];
                onehot(r, data.shape_labels[static_cast<std::size_t>(seq)]) = 1.0;
            }
            Var logits = net_(Var::constant(x));
            Var probs = softmax_rows(logits);
            Var loss = neg(mean_all(rowwise_sum(mul(Var::constant(onehot), log(probs)))));
            Gradients grads = backward(loss);
            opt.step(params, grads, lr);
        }
    }
}

double FrameClassifier::accuracy(const SequenceDataset& data) const {
    if (!data.labeled) {
        throw std::invalid_argument("FrameClassifier::accuracy: labeled data required");
    }
    std::int64_t correct = 0, total = 0;
    for (std::int64_t seq = 0; seq < data.dims.count; ++seq) {
        Matrix x = data.sequence(seq);
        Matrix logits = net_(Var::constant(x)).value();
        for (Eigen::Index t = 0; t < logits.rows(); ++t) {
            Eigen::Index best;
            logits.row(t).maxCoeff(&best);
            if (static_cast<std::int32_t>(best) == data.shape_labels[static_cast<std::size_t>(seq)]) {
                ++correct;
            }
            ++total;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(total);
}

Eigen::VectorXd FrameClassifier::sequence_probs(const Matrix& seq) const {
    Matrix probs = softmax_rows(net_(Var::constant(seq))).value();
    Eigen::VectorXd mean = probs.colwise().mean().transpose();
    return mean;
}

double swap_disentanglement_error(const RWAEModel& model, const SequenceDataset& test,
                                  const FrameClassifier& clf, Rng& rng, double classifier_gate) {
    if (!test.labeled) {
        throw std::invalid_argument("swap_disentanglement_error: labeled data required");
    }
    const double clf_acc = clf.accuracy(test);
    if (clf_acc < classifier_gate) {
        std::ostringstream os;
        os << "swap_disentanglement_error: oracle classifier accuracy " << clf_acc
           << " is below the required gate " << classifier_gate
           << "; the metric would be uninformative";
        throw config_error(os.str());
    }

    std::int64_t correct = 0;
    const int t_steps = static_cast<int>(test.dims.timesteps);
    for (std::int64_t i = 0; i < test.dims.count; ++i) {
        SequenceEncoding enc =
            model.encode_sequence(sequence_frames(test.sequence(i)), nullptr);
        std::vector<Var> z_m = model.prior_rollout(1, t_steps, rng);
        std::optional<Var> action;
        if (model.has_actions()) {
            // Generation-time action: a one-hot draw from the uniform prior.
            Matrix a = Matrix::Zero(1, model.config().n_actions);
            a(0, static_cast<Eigen::Index>(rng.below(
                     static_cast<std::uint64_t>(model.config().n_actions)))) = 1.0;
            action = Var::constant(a);
        }
        Matrix generated = stack_frames(model.decode_sequence(enc.z_c, z_m, action));
        Eigen::VectorXd probs = clf.sequence_probs(generated);
        Eigen::Index best;
        probs.maxCoeff(&best);
        if (static_cast<std::int32_t>(best) == test.shape_labels[static_cast<std::size_t>(i)]) {
            ++correct;
        }
    }
    const double acc = static_cast<double>(correct) / static_cast<double>(test.dims.count);
    return 100.0 * (1.0 - acc);
}

double action_accuracy(const RWAEModel& model, const SequenceDataset& test) {
    if (!model.has_actions()) {
        throw std::invalid_argument("action_accuracy: model has no action variable");
    }
    if (!test.labeled) throw std::invalid_argument("action_accuracy: labeled data required");
    const int a = model.config().n_actions;
    const auto n_motions = static_cast<int>(test.motion_vocab.size());

    std::vector<int> preds(static_cast<std::size_t>(test.dims.count));
    for (std::int64_t i = 0; i < test.dims.count; ++i) {
        SequenceEncoding enc =
            model.encode_sequence(sequence_frames(test.sequence(i)), nullptr);
        Matrix probs = model.infer_action(enc.z_m).value();
        Eigen::Index best;
        probs.row(0).maxCoeff(&best);
        preds[static_cast<std::size_t>(i)] = static_cast<int>(best);
    }

    // Confusion counts predicted-class x motion-label.
    Matrix counts = Matrix::Zero(a, n_motions);
    for (std::int64_t i = 0; i < test.dims.count; ++i) {
        counts(preds[static_cast<std::size_t>(i)],
               test.motion_labels[static_cast<std::size_t>(i)]) += 1.0;
    }

    double best_correct = 0.0;
    if (a == n_motions && a <= 8) {
        // Exact assignment over label permutations.
        std::vector<int> perm(static_cast<std::size_t>(a));
        std::iota(perm.begin(), perm.end(), 0);
        do {
            double c = 0.0;
            for (int k = 0; k < a; ++k) c += counts(k, perm[static_cast<std::size_t>(k)]);
            best_correct = std::max(best_correct, c);
        } while (std::next_permutation(perm.begin(), perm.end()));
    } else {
        // Cluster purity: each predicted class maps to its majority label.
        for (int k = 0; k < a; ++k) best_correct += counts.row(k).maxCoeff();
    }
    return best_correct / static_cast<double>(test.dims.count);
}

EerScores identity_verification_scores(const RWAEModel& model, const SequenceDataset& data) {
    if (!data.labeled) {
        throw std::invalid_argument("identity_verification_scores: labeled data required");
    }
    std::vector<std::vector<std::int64_t>> singles;
    singles.reserve(static_cast<std::size_t>(data.dims.count));
    for (std::int64_t i = 0; i < data.dims.count; ++i) singles.push_back({i});
    IdentityFeatures feats = latent_identity_features(model, data, singles);

    auto cosine = [](const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b) {
        const double denom = a.norm() * b.norm();
        return denom > 0.0 ? a.dot(b) / denom : 0.0;
    };

    EerScores out;
    for (std::int64_t i = 0; i < data.dims.count; ++i) {
        for (std::int64_t j = i + 1; j < data.dims.count; ++j) {
            const bool same = data.shape_labels[static_cast<std::size_t>(i)] ==
                              data.shape_labels[static_cast<std::size_t>(j)];
            const double sc = cosine(feats.mu_c.row(i), feats.mu_c.row(j));
            const double sm = cosine(feats.mu_m.row(i), feats.mu_m.row(j));
            if (same) {
                out.content.same_scores.push_back(sc);
                out.motion.same_scores.push_back(sm);
            } else {
                out.content.diff_scores.push_back(sc);
                out.motion.diff_scores.push_back(sm);
            }
        }
    }
    return out;
}

// --- evaluation report ---------------------------------------------------------------

std::string fnv1a_hex(const std::string& s) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    std::ostringstream os;
    os << std::hex << h;
    return os.str();
}

void write_eval_report(const std::string& path, const std::vector<MetricRecord>& records,
                       const std::string& config_hash) {
    std::ofstream os(path);
    if (!os) throw io_error("cannot open '" + path + "' for writing");
    for (const MetricRecord& r : records) {
        os << "metric=" << r.name << " value=" << std::setprecision(17) << r.value
           << " n=" << r.sample_count << " config=" << config_hash << "\n";
    }
    if (!os) throw io_error("write failed for '" + path + "'");
}

} // namespace rwae
