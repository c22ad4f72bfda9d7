#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rwae/dataset.hpp"
#include "rwae/model.hpp"
#include "rwae/train.hpp"
#include "test_util.hpp"

using namespace rwae;
using rwae::test::random_matrix;
using rwae::test::rel_err;

namespace {

ModelConfig tiny_config() {
    ModelConfig mc;
    mc.frame_dim = 16; // 4x4 frames
    mc.d_c = 2;
    mc.d_m = 2;
    mc.n_actions = 3;
    mc.feat_hidden = 8;
    mc.feat_dim = 6;
    mc.enc_rnn = 6;
    mc.dyn_rnn = 5;
    mc.prior_rnn = 5;
    mc.dec_rnn = 8;
    mc.dec_hidden = 8;
    mc.action_rnn = 4;
    mc.critic_hidden = {6};
    return mc;
}

std::vector<Var> random_frames(int t_steps, int batch, int frame_dim, Rng& rng) {
    std::vector<Var> out;
    for (int t = 0; t < t_steps; ++t) {
        Matrix m(batch, frame_dim);
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = rng.uniform();
        }
        out.push_back(Var::constant(m));
    }
    return out;
}

} // namespace

TEST_CASE("reparam_sample closed forms") {
    GaussianParams p{Var::constant((Matrix(1, 3) << 1, 2, 3).finished()),
                     Var::constant(Matrix::Zero(1, 3))};
    SUBCASE("zero noise returns the mean") {
        Var z = reparam_sample(p, Var::constant(Matrix::Zero(1, 3)));
        CHECK(z.value() == p.mean.value());
    }
    SUBCASE("unit Gaussian passes the noise through") {
        GaussianParams u{Var::constant(Matrix::Zero(1, 3)), Var::constant(Matrix::Zero(1, 3))};
        Matrix e = (Matrix(1, 3) << 0.3, -1.1, 2.2).finished();
        CHECK(reparam_sample(u, Var::constant(e)).value() == e);
    }
    SUBCASE("clamped log-variance floor gives a nearly deterministic sample") {
        GaussianParams c{Var::constant(Matrix::Constant(1, 2, 5.0)),
                         Var::constant(Matrix::Constant(1, 2, -10.0))};
        Var z = reparam_sample(c, Var::constant(Matrix::Ones(1, 2)));
        CHECK(std::abs(z.value()(0, 0) - 5.0) == doctest::Approx(std::exp(-5.0)));
    }
    SUBCASE("length mismatch is rejected") {
        CHECK_THROWS_AS(reparam_sample(p, Var::constant(Matrix::Zero(1, 4))),
                        std::invalid_argument);
    }
    SUBCASE("gradient w.r.t. the mean is the identity") {
        Rng rng(1);
        Var mean = Var::param(random_matrix(1, 3, rng));
        GaussianParams g{mean, Var::constant(Matrix::Zero(1, 3))};
        Var loss = sum_all(reparam_sample(g, Var::constant(Matrix::Ones(1, 3))));
        Matrix grad = backward(loss).at(mean).value();
        CHECK((grad - Matrix::Ones(1, 3)).cwiseAbs().maxCoeff() <= 1e-6);
    }
}

TEST_CASE("gumbel_softmax_sample closed forms and invariants") {
    SUBCASE("symmetry: zero logits and zero noise give the uniform vector") {
        Matrix la = Matrix::Zero(1, 2), g = Matrix::Zero(1, 2);
        Matrix y = gumbel_softmax_sample(la, 0.7, g);
        CHECK(y(0, 0) == doctest::Approx(0.5));
        CHECK(y(0, 1) == doctest::Approx(0.5));
    }
    SUBCASE("low temperature approaches the one-hot argmax") {
        Rng rng(2);
        Matrix la = random_matrix(1, 5, rng), g = random_matrix(1, 5, rng);
        Matrix y = gumbel_softmax_sample(la, 0.01, g);
        Eigen::Index want;
        (la + g).row(0).maxCoeff(&want);
        Eigen::Index got;
        y.row(0).maxCoeff(&got);
        CHECK(got == want);
        CHECK(y(0, got) == doctest::Approx(1.0).epsilon(1e-3));
    }
    SUBCASE("samples always normalize and stay inside the simplex") {
        Rng rng(3);
        for (int it = 0; it < 1000; ++it) {
            Matrix la = random_matrix(1, 4, rng, 2.0);
            Matrix g(1, 4);
            for (int j = 0; j < 4; ++j) g(0, j) = rng.gumbel();
            Matrix y = gumbel_softmax_sample(la, 0.01 + rng.uniform(), g);
            CHECK(std::abs(y.row(0).sum() - 1.0) <= 1e-6);
            CHECK(y.minCoeff() > 0.0);
        }
    }
    SUBCASE("non-positive temperature is rejected") {
        Matrix la = Matrix::Zero(1, 2);
        CHECK_THROWS_AS(gumbel_softmax_sample(la, 0.0, la), std::invalid_argument);
    }
}

TEST_CASE("categorical_kl_to_uniform examples") {
    Eigen::VectorXd uniform = Eigen::VectorXd::Constant(4, 0.25);
    CHECK(categorical_kl_to_uniform(uniform) == doctest::Approx(0.0));

    Eigen::VectorXd onehot = Eigen::VectorXd::Zero(5);
    onehot(2) = 1.0;
    CHECK(categorical_kl_to_uniform(onehot) == doctest::Approx(std::log(5.0)));

    Eigen::VectorXd p(2);
    p << 0.7, 0.3;
    const double want = 0.7 * std::log(1.4) + 0.3 * std::log(0.6);
    CHECK(categorical_kl_to_uniform(p) == doctest::Approx(want).epsilon(1e-12));
    CHECK(want == doctest::Approx(0.082282).epsilon(1e-4));

    Eigen::VectorXd bad(2);
    bad << 0.9, 0.4;
    CHECK_THROWS_AS(categorical_kl_to_uniform(bad), std::invalid_argument);
    bad << 1.2, -0.2;
    CHECK_THROWS_AS(categorical_kl_to_uniform(bad), std::invalid_argument);

    // Graph route agrees on strictly positive rows.
    Matrix rows(2, 3);
    rows << 0.2, 0.5, 0.3, 1.0 / 3, 1.0 / 3, 1.0 / 3;
    Matrix got = categorical_kl_to_uniform_rows(Var::constant(rows)).value();
    CHECK(got(0, 0) == doctest::Approx(categorical_kl_to_uniform(rows.row(0).transpose())));
    CHECK(got(1, 0) == doctest::Approx(0.0));
}

TEST_CASE("encoder and decoder shape contracts") {
    Rng rng(4);
    RWAEModel model(tiny_config(), rng);
    Rng data_rng(5);
    const int b = 3, t_steps = 4;
    auto frames = random_frames(t_steps, b, 16, data_rng);

    std::vector<Var> feats;
    for (const Var& f : frames) feats.push_back(model.frame_features(f));
    CHECK(feats[0].rows() == b);
    CHECK(feats[0].cols() == 6);

    GaussianParams st = model.encode_static(feats);
    CHECK(st.mean.rows() == b);
    CHECK(st.mean.cols() == 2);
    CHECK(st.log_var.rows() == b);
    CHECK_THROWS_AS(model.encode_static({}), std::invalid_argument);

    auto dyn = model.encode_dynamic_step(feats[0], model.zero_motion(b),
                                         model.dyn_initial_state(b));
    CHECK(dyn.post.mean.cols() == 2);

    auto prior = model.prior_dynamic_step(model.zero_motion(b), model.prior_initial_state(b));
    CHECK(prior.prior.mean.cols() == 2);

    Matrix a = Matrix::Zero(b, 3);
    a.col(0).setOnes();
    auto dec = model.decode_step(st.mean, dyn.post.mean, Var::constant(a),
                                 model.decoder_initial_state(b));
    CHECK(dec.frame.rows() == b);
    CHECK(dec.frame.cols() == 16);
    CHECK(dec.frame.value().minCoeff() >= 0.0);
    CHECK(dec.frame.value().maxCoeff() <= 1.0);

    // Same inputs, same parameters -> identical outputs.
    auto dec2 = model.decode_step(st.mean, dyn.post.mean, Var::constant(a),
                                  model.decoder_initial_state(b));
    CHECK(dec.frame.value() == dec2.frame.value());
}

TEST_CASE("dynamic posterior depends on the motion history") {
    Rng rng(6);
    RWAEModel model(tiny_config(), rng);
    Rng data_rng(7);
    Var feat = model.frame_features(random_frames(1, 2, 16, data_rng)[0]);

    Var state = model.dyn_initial_state(2);
    Var z_a = Var::constant(random_matrix(2, 2, data_rng));
    Var z_b = Var::constant(random_matrix(2, 2, data_rng));
    auto step_a = model.encode_dynamic_step(feat, z_a, state);
    auto step_b = model.encode_dynamic_step(feat, z_b, state);
    CHECK((step_a.post.mean.value() - step_b.post.mean.value()).cwiseAbs().maxCoeff() > 1e-12);
}

TEST_CASE("prior rollout is deterministic under a fixed seed and shapes are right") {
    Rng rng(8);
    RWAEModel model(tiny_config(), rng);
    Rng n1(9), n2(9);
    auto r1 = model.prior_rollout(2, 5, n1);
    auto r2 = model.prior_rollout(2, 5, n2);
    REQUIRE(r1.size() == 5);
    CHECK(r1[0].rows() == 2);
    CHECK(r1[0].cols() == 2);
    for (int t = 0; t < 5; ++t) CHECK(r1[t].value() == r2[t].value());
}

TEST_CASE("infer_action returns a simplex row per sequence, independent across the batch") {
    Rng rng(10);
    RWAEModel model(tiny_config(), rng);
    Rng data_rng(11);
    std::vector<Var> z_seq;
    for (int t = 0; t < 4; ++t) z_seq.push_back(Var::constant(random_matrix(3, 2, data_rng)));
    Matrix probs = model.infer_action(z_seq).value();
    REQUIRE(probs.rows() == 3);
    REQUIRE(probs.cols() == 3);
    for (int i = 0; i < 3; ++i) {
        CHECK(probs.row(i).sum() == doctest::Approx(1.0));
        CHECK(probs.row(i).minCoeff() > 0.0);
    }

    // Permuting sequences within the batch permutes outputs identically.
    std::vector<Var> swapped;
    for (const Var& z : z_seq) {
        Matrix m = z.value();
        m.row(0).swap(m.row(2));
        swapped.push_back(Var::constant(m));
    }
    Matrix probs2 = model.infer_action(swapped).value();
    CHECK((probs2.row(0) - probs.row(2)).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((probs2.row(2) - probs.row(0)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("one static code is shared across every decode step") {
    Rng rng(12);
    ModelConfig mc = tiny_config();
    mc.n_actions = 0;
    RWAEModel model(mc, rng);
    Rng data_rng(13);
    auto frames = random_frames(3, 2, 16, data_rng);

    SequenceEncoding enc = model.encode_sequence(frames, nullptr);
    auto base = model.decode_sequence(enc.z_c, enc.z_m, std::nullopt);

    // Swapping z_c between the two sequences must change every timestep.
    Matrix zc = enc.z_c.value();
    zc.row(0).swap(zc.row(1));
    auto swapped = model.decode_sequence(Var::constant(zc), enc.z_m, std::nullopt);
    for (std::size_t t = 0; t < base.size(); ++t) {
        CHECK((base[t].value() - swapped[t].value()).cwiseAbs().maxCoeff() > 1e-12);
    }
}

TEST_CASE("end-to-end reconstruction gradient matches finite differences on a tiny model") {
    Rng rng(14);
    ModelConfig mc = tiny_config();
    mc.n_actions = 0;
    RWAEModel model(mc, rng);
    Rng data_rng(15);
    auto frames = random_frames(3, 2, 16, data_rng);

    // Fixed noise so the loss is a deterministic function of the parameters.
    Rng noise_template(16);
    std::vector<Matrix> eps;
    eps.push_back(random_matrix(2, 2, noise_template)); // static
    for (int t = 0; t < 3; ++t) eps.push_back(random_matrix(2, 2, noise_template));

    auto build = [&]() {
        std::vector<Var> feats;
        for (const Var& x : frames) feats.push_back(model.frame_features(x));
        GaussianParams st = model.encode_static(feats);
        Var z_c = reparam_sample(st, Var::constant(eps[0]));
        Var state = model.dyn_initial_state(2);
        Var z_prev = model.zero_motion(2);
        std::vector<Var> z_seq;
        for (int t = 0; t < 3; ++t) {
            auto step = model.encode_dynamic_step(feats[static_cast<std::size_t>(t)], z_prev,
                                                  state);
            Var z = reparam_sample(step.post, Var::constant(eps[static_cast<std::size_t>(t) + 1]));
            z_seq.push_back(z);
            state = step.state;
            z_prev = z;
        }
        Var rec;
        Var dec_state = model.decoder_initial_state(2);
        for (int t = 0; t < 3; ++t) {
            auto step = model.decode_step(z_c, z_seq[static_cast<std::size_t>(t)], std::nullopt,
                                          dec_state);
            Var cost = recon_cost(frames[static_cast<std::size_t>(t)], step.frame, ReconKind::L2);
            rec = rec.valid() ? add(rec, cost) : cost;
            dec_state = step.state;
        }
        return mul(rec, 0.5);
    };

    // 10 randomly chosen parameter entries across all groups.
    ParamList params = model.all_params();
    Gradients grads = backward(build());
    Rng pick(17);
    const double h = 1e-4;
    for (int k = 0; k < 10; ++k) {
        const ParamRef& p = params[pick.below(params.size())];
        const Eigen::Index i = static_cast<Eigen::Index>(pick.below(std::uint64_t(p.var.rows())));
        const Eigen::Index j = static_cast<Eigen::Index>(pick.below(std::uint64_t(p.var.cols())));
        const double orig = p.var.value()(i, j);
        p.var.get()->value(i, j) = orig + h;
        const double up = build().item();
        p.var.get()->value(i, j) = orig - h;
        const double down = build().item();
        p.var.get()->value(i, j) = orig;
        const double fd = (up - down) / (2 * h);
        const double an = grads.at(p.var).value()(i, j);
        const double scale = std::max({std::abs(fd), std::abs(an), 1e-8});
        CHECK(std::abs(fd - an) / scale < 1e-3);
    }
}
