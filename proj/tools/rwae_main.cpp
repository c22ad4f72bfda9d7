// rwae: generate moving-shape data, train the sequential autoencoder in its
// MMD or GAN regime, evaluate disentanglement, and render swaps and samples.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include "run_config.hpp"
#include "rwae/errors.hpp"
#include "rwae/image.hpp"
#include "rwae/metrics.hpp"
#include "rwae/train.hpp"

namespace fs = std::filesystem;
using namespace rwae;
using cli::RunConfig;

namespace {

void dump_config(const RunConfig& rc) {
    std::cout << "# resolved configuration\n" << rc.to_text() << "# end configuration\n";
    std::cout.flush();
}

std::string read_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw io_error("cannot open config file '" + path + "'");
    return std::string((std::istreambuf_iterator<char>(is)), {});
}

void write_dataset_summary(const SequenceDataset& data, const std::string& dataset_path,
                           const std::string& summary_path) {
    std::ofstream os(summary_path);
    if (!os) throw io_error("cannot open '" + summary_path + "' for writing");
    os << "dataset " << dataset_path << "\n";
    os << "sequences " << data.dims.count << "\n";
    os << "timesteps " << data.dims.timesteps << "\n";
    os << "frame " << data.dims.channels << "x" << data.dims.height << "x" << data.dims.width
       << "\n";
    std::vector<std::int64_t> shape_counts(data.shape_vocab.size(), 0);
    std::vector<std::int64_t> motion_counts(data.motion_vocab.size(), 0);
    for (auto v : data.shape_labels) shape_counts[std::size_t(v)]++;
    for (auto v : data.motion_labels) motion_counts[std::size_t(v)]++;
    for (std::size_t i = 0; i < data.shape_vocab.size(); ++i) {
        os << "shape " << data.shape_vocab[i] << " " << shape_counts[i] << "\n";
    }
    for (std::size_t i = 0; i < data.motion_vocab.size(); ++i) {
        os << "motion " << data.motion_vocab[i] << " " << motion_counts[i] << "\n";
    }
}

// Writes one sequence as a row of tiles plus the individual frames.
void write_sequence_images(const fs::path& dir, const std::string& stem, const Matrix& seq,
                           int channels, int height, int width) {
    std::vector<const double*> tiles;
    std::vector<Matrix> rows;
    rows.reserve(std::size_t(seq.rows()));
    for (Eigen::Index t = 0; t < seq.rows(); ++t) {
        rows.push_back(seq.row(t));
        char name[64];
        std::snprintf(name, sizeof(name), "%s_t%03d.pgm", stem.c_str(), int(t));
        write_frame_image((dir / name).string(), rows.back().data(), channels, height, width);
    }
    for (const Matrix& r : rows) tiles.push_back(r.data());
    write_frame_grid((dir / (stem + ".pgm")).string(), tiles, 1, int(seq.rows()), channels,
                     height, width);
}

// --- gen-data ---------------------------------------------------------------------

struct GenArgs {
    std::string out;
    std::string config_path;
    int size = 0, frames = 0, count = 0, speed_min = 0, speed_max = 0;
    std::string shapes, motions, sizes, colors;
    std::uint64_t seed = 0;
};

int run_gen_data(const CLI::App& cmd, const GenArgs& args) {
    RunConfig rc;
    rc.command = "gen-data";
    if (!args.config_path.empty()) {
        rc = RunConfig::from_text(read_file(args.config_path));
        rc.command = "gen-data";
    }
    GeneratorConfig& g = rc.gen;
    if (cmd.count("--size")) g.image_size = args.size;
    if (cmd.count("--frames")) g.timesteps = args.frames;
    if (cmd.count("--count")) g.count = args.count;
    if (cmd.count("--speed-min")) g.speed_min = args.speed_min;
    if (cmd.count("--speed-max")) g.speed_max = args.speed_max;
    if (cmd.count("--shapes")) {
        g.shapes.clear();
        std::istringstream is(args.shapes);
        std::string item;
        while (std::getline(is, item, ',')) g.shapes.push_back(parse_shape(trim(item)));
    }
    if (cmd.count("--motions")) {
        g.motions.clear();
        std::istringstream is(args.motions);
        std::string item;
        while (std::getline(is, item, ',')) g.motions.push_back(parse_motion(trim(item)));
    }
    if (cmd.count("--sizes")) {
        g.sizes.clear();
        std::istringstream is(args.sizes);
        std::string item;
        while (std::getline(is, item, ',')) g.sizes.push_back(std::stoi(trim(item)));
    }
    if (cmd.count("--colors")) {
        g.colors.clear();
        std::istringstream is(args.colors);
        std::string item;
        while (std::getline(is, item, ',')) g.colors.push_back(std::stod(trim(item)));
    }
    g.seed = cli::env_seed_fallback(cmd.count("--seed") ? args.seed : g.seed,
                                    cmd.count("--seed") != 0);
    rc.output_path = args.out;
    g.validate();
    dump_config(rc);

    SequenceDataset data = generate_dataset(g);
    save_dataset(data, args.out);
    write_dataset_summary(data, args.out, args.out + ".summary.txt");
    std::cout << "wrote " << data.dims.count << " sequences to " << args.out << "\n";
    return 0;
}

// --- train ------------------------------------------------------------------------

struct TrainArgs {
    std::string data, out_dir, preset, config_path, mode, weak, resume;
    int epochs = 0, batch_size = 0, inner_steps = 0, save_every = 0;
    double beta1 = 0, beta2 = 0, beta3 = 0, tau = 0;
    double lr_decoder = 0, lr_encoder = 0, lr_critic = 0;
    std::uint64_t seed = 0;
};

int run_train(const CLI::App& cmd, const TrainArgs& args) {
    SequenceDataset data = load_dataset(args.data);
    fs::create_directories(args.out_dir);

    if (!args.resume.empty()) {
        Checkpoint ck = load_checkpoint(args.resume);
        if (cmd.count("--epochs")) ck.config.epochs = args.epochs;
        RunConfig rc;
        rc.command = "train";
        rc.train = ck.config;
        rc.dataset_path = args.data;
        rc.checkpoint_path = args.resume;
        rc.output_path = args.out_dir;
        dump_config(rc);

        Trainer trainer(data, ck);
        std::ofstream trace(fs::path(args.out_dir) / "trace.txt", std::ios::app);
        trainer.trace = &trace;
        trainer.checkpoint_dir = args.out_dir;
        trainer.run();
        std::cout << "resumed training complete at epoch " << trainer.epoch() << "\n";
        return 0;
    }

    RunConfig rc;
    rc.command = "train";
    KvFile file_kv;
    if (!args.config_path.empty()) file_kv = parse_kv_text(read_file(args.config_path));

    // Precedence: preset expands first, file keys override it, flags override both.
    std::string preset_name;
    if (cmd.count("--preset")) {
        preset_name = args.preset;
    } else if (const KvSection* run = file_kv.find("run")) {
        if (const std::string* p = run->find("preset"); p && !p->empty()) preset_name = *p;
    }
    TrainConfig preset_cfg;
    bool have_preset = false;
    if (!preset_name.empty()) {
        preset_cfg = preset_by_name(preset_name);
        rc.preset = preset_name;
        rc.train = preset_cfg;
        have_preset = true;
    }
    TrainConfig::apply_kv(rc.train, file_kv);
    rc.gen = cli::gen_from_kv(file_kv);
    TrainConfig& t = rc.train;

    auto flag_override = [&](const char* flag, auto& field, const auto& value, auto preset_value) {
        if (!cmd.count(flag)) return;
        if (have_preset && preset_value != value) {
            std::cout << "note: " << flag << "=" << value << " overrides preset value "
                      << preset_value << "\n";
        }
        field = value;
    };
    if (cmd.count("--mode")) t.mode = parse_reg_mode(args.mode);
    flag_override("--beta1", t.beta1, args.beta1, preset_cfg.beta1);
    flag_override("--beta2", t.beta2, args.beta2, preset_cfg.beta2);
    flag_override("--beta3", t.beta3, args.beta3, preset_cfg.beta3);
    flag_override("--tau", t.tau, args.tau, preset_cfg.tau);
    flag_override("--lr-decoder", t.lr_decoder, args.lr_decoder, preset_cfg.lr_decoder);
    flag_override("--lr-encoder", t.lr_encoder, args.lr_encoder, preset_cfg.lr_encoder);
    flag_override("--lr-critic", t.lr_critic, args.lr_critic, preset_cfg.lr_critic);
    if (cmd.count("--epochs")) t.epochs = args.epochs;
    if (cmd.count("--batch-size")) t.batch_size = args.batch_size;
    if (cmd.count("--inner-steps")) t.inner_steps = args.inner_steps;
    if (cmd.count("--save-every")) t.checkpoint_every = args.save_every;
    t.seed = cli::env_seed_fallback(cmd.count("--seed") ? args.seed : t.seed,
                                    cmd.count("--seed") != 0);

    if (cmd.count("--weak-supervision")) {
        if (args.weak == "on") {
            if (t.n_actions == 0) {
                t.n_actions = int(data.motion_vocab.size());
                std::cout << "note: n_actions defaulted to the dataset's " << t.n_actions
                          << " motion types\n";
            }
            if (t.beta3 == 0.0) {
                t.beta3 = 50.0; // published categorical weight
                std::cout << "note: beta3 defaulted to 50\n";
            }
        } else if (args.weak == "off") {
            t.beta3 = 0.0;
        } else {
            throw config_error("--weak-supervision expects on|off");
        }
    }

    rc.dataset_path = args.data;
    rc.output_path = args.out_dir;
    t.frame_channels = int(data.dims.channels);
    t.frame_height = int(data.dims.height);
    t.frame_width = int(data.dims.width);
    t.validate();
    dump_config(rc);

    Trainer trainer(data, t);
    std::ofstream trace(fs::path(args.out_dir) / "trace.txt", std::ios::app);
    trainer.trace = &trace;
    trainer.checkpoint_dir = args.out_dir;
    trainer.run();
    std::cout << "training complete: " << trainer.counters().decoder_updates
              << " outer steps, final checkpoint in " << args.out_dir << "\n";
    return 0;
}

// --- eval -------------------------------------------------------------------------

struct EvalArgs {
    std::string ckpt, data, train_data, out;
    std::uint64_t seed = 0;
    int clf_epochs = 30;
};

void export_scores(const std::string& path, const ScorePairSet& s) {
    std::ofstream os(path);
    if (!os) throw io_error("cannot open '" + path + "' for writing");
    os << std::setprecision(17);
    for (double v : s.same_scores) os << "same " << v << "\n";
    for (double v : s.diff_scores) os << "diff " << v << "\n";
}

int run_eval(const CLI::App& cmd, const EvalArgs& args) {
    Checkpoint ck = load_checkpoint(args.ckpt);
    SequenceDataset test = load_dataset(args.data);
    if (!test.labeled) throw config_error("eval needs a labeled dataset");

    const std::uint64_t seed =
        cli::env_seed_fallback(cmd.count("--seed") ? args.seed : ck.config.seed,
                               cmd.count("--seed") != 0);

    RunConfig rc;
    rc.command = "eval";
    rc.train = ck.config;
    rc.dataset_path = args.data;
    rc.train_dataset_path = args.train_data;
    rc.checkpoint_path = args.ckpt;
    rc.output_path = args.out;
    dump_config(rc);

    RWAEModel model = build_model_from_checkpoint(ck);

    // Classifier fit split: a separate labeled set when provided, otherwise
    // the first half of the test set (metrics then use the second half).
    SequenceDataset clf_data;
    SequenceDataset eval_data;
    if (!args.train_data.empty()) {
        clf_data = load_dataset(args.train_data);
        eval_data = std::move(test);
    } else {
        std::vector<std::int64_t> first, second;
        for (std::int64_t i = 0; i < test.dims.count; ++i) {
            (i < test.dims.count / 2 ? first : second).push_back(i);
        }
        clf_data = subset(test, first);
        eval_data = subset(test, second);
    }

    FrameClassifier clf(int(eval_data.dims.frame_dim()), int(eval_data.shape_vocab.size()),
                        {64, 32}, seed ^ 0x9e3779b97f4a7c15ULL);
    clf.fit(clf_data, args.clf_epochs, 32, 2e-3);

    Rng rng(seed);
    const double swap_err = swap_disentanglement_error(model, eval_data, clf, rng);
    const double mse = reconstruction_mse(model, eval_data);
    EerScores scores = identity_verification_scores(model, eval_data);
    const double eer_c = equal_error_rate(scores.content);
    const double eer_m = equal_error_rate(scores.motion);

    const std::string config_hash = fnv1a_hex(rc.to_text());
    std::vector<MetricRecord> records = {
        {"recon_mse", mse, eval_data.dims.count},
        {"swap_error_percent", swap_err, eval_data.dims.count},
        {"eer_content", eer_c,
         std::int64_t(scores.content.same_scores.size() + scores.content.diff_scores.size())},
        {"eer_motion", eer_m,
         std::int64_t(scores.motion.same_scores.size() + scores.motion.diff_scores.size())},
    };
    if (model.has_actions()) {
        records.push_back({"action_accuracy", action_accuracy(model, eval_data),
                           eval_data.dims.count});
    }
    write_eval_report(args.out, records, config_hash);
    export_scores(args.out + ".scores_content.txt", scores.content);
    export_scores(args.out + ".scores_motion.txt", scores.motion);
    for (const MetricRecord& r : records) {
        std::cout << r.name << " = " << r.value << "\n";
    }
    return 0;
}

// --- swap / sample ------------------------------------------------------------------

struct SwapArgs {
    std::string ckpt, data, out_dir;
    std::int64_t i = 0, j = 0;
};

int run_swap(const CLI::App&, const SwapArgs& args) {
    Checkpoint ck = load_checkpoint(args.ckpt);
    SequenceDataset data = load_dataset(args.data);
    if (args.i < 0 || args.i >= data.dims.count || args.j < 0 || args.j >= data.dims.count) {
        throw std::invalid_argument("swap: sequence index out of range");
    }

    RunConfig rc;
    rc.command = "swap";
    rc.train = ck.config;
    rc.dataset_path = args.data;
    rc.checkpoint_path = args.ckpt;
    rc.output_path = args.out_dir;
    dump_config(rc);

    RWAEModel model = build_model_from_checkpoint(ck);
    fs::create_directories(args.out_dir);

    Matrix a = data.sequence(args.i);
    Matrix b = data.sequence(args.j);
    SwapPair sw = swap_generate(model, a, b);

    const int c = int(data.dims.channels), h = int(data.dims.height), w = int(data.dims.width);
    const fs::path dir(args.out_dir);
    write_sequence_images(dir, "rowA", a, c, h, w);
    write_sequence_images(dir, "rowAB", sw.x_ab, c, h, w);
    write_sequence_images(dir, "rowBA", sw.x_ba, c, h, w);
    write_sequence_images(dir, "rowB", b, c, h, w);

    // 4-row grid: A, A-content/B-motion, B-content/A-motion, B.
    std::vector<const double*> tiles;
    std::vector<Matrix> rows;
    for (const Matrix* seq : {&a, &sw.x_ab, &sw.x_ba, &b}) {
        for (Eigen::Index t = 0; t < seq->rows(); ++t) rows.push_back(seq->row(t));
    }
    for (const Matrix& r : rows) tiles.push_back(r.data());
    write_frame_grid((dir / "grid.pgm").string(), tiles, 4, int(a.rows()), c, h, w);
    std::cout << "wrote swap grid to " << (dir / "grid.pgm").string() << "\n";
    return 0;
}

struct SampleArgs {
    std::string ckpt, out_dir;
    int count = 1, frames = 0;
    std::uint64_t seed = 0;
};

int run_sample(const CLI::App& cmd, const SampleArgs& args) {
    Checkpoint ck = load_checkpoint(args.ckpt);
    const std::uint64_t seed =
        cli::env_seed_fallback(cmd.count("--seed") ? args.seed : ck.config.seed,
                               cmd.count("--seed") != 0);
    const int t_steps = cmd.count("--frames") ? args.frames : 8;
    if (args.count < 1) throw std::invalid_argument("sample: --count must be >= 1");
    if (t_steps < 1) throw std::invalid_argument("sample: --frames must be >= 1");

    RunConfig rc;
    rc.command = "sample";
    rc.train = ck.config;
    rc.checkpoint_path = args.ckpt;
    rc.output_path = args.out_dir;
    dump_config(rc);

    RWAEModel model = build_model_from_checkpoint(ck);
    fs::create_directories(args.out_dir);
    Rng rng(seed);

    const int c = ck.config.frame_channels, h = ck.config.frame_height,
              w = ck.config.frame_width;
    for (int s = 0; s < args.count; ++s) {
        Matrix zc(1, ck.config.d_c);
        for (Eigen::Index k = 0; k < zc.cols(); ++k) zc(0, k) = rng.normal();
        std::vector<Var> z_m = model.prior_rollout(1, t_steps, rng);
        std::optional<Var> action;
        if (model.has_actions()) {
            Matrix a = Matrix::Zero(1, model.config().n_actions);
            a(0, Eigen::Index(rng.below(std::uint64_t(model.config().n_actions)))) = 1.0;
            action = Var::constant(a);
        }
        std::vector<Var> frames = model.decode_sequence(Var::constant(zc), z_m, action);
        Matrix seq(t_steps, Eigen::Index(c) * h * w);
        for (int t = 0; t < t_steps; ++t) seq.row(t) = frames[std::size_t(t)].value();
        char stem[32];
        std::snprintf(stem, sizeof(stem), "sample%03d", s);
        write_sequence_images(fs::path(args.out_dir), stem, seq, c, h, w);
    }
    std::cout << "wrote " << args.count << " samples x " << t_steps << " frames to "
              << args.out_dir << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Recurrent Wasserstein autoencoder for sequence disentanglement"};
    app.require_subcommand(1);
    int rc = 0;

    GenArgs gen_args;
    auto* gen = app.add_subcommand("gen-data", "generate a moving-shape dataset");
    gen->add_option("--out", gen_args.out, "output dataset file")->required();
    gen->add_option("--size", gen_args.size, "frame height/width");
    gen->add_option("--frames", gen_args.frames, "timesteps per sequence");
    gen->add_option("--count", gen_args.count, "number of sequences");
    gen->add_option("--shapes", gen_args.shapes, "comma list: triangle,square,circle");
    gen->add_option("--motions", gen_args.motions, "comma list: line,zigzag,diagonal,bounce");
    gen->add_option("--sizes", gen_args.sizes, "comma list of shape sizes");
    gen->add_option("--colors", gen_args.colors, "comma list of intensities in (0,1]");
    gen->add_option("--speed-min", gen_args.speed_min, "minimum speed, pixels/frame");
    gen->add_option("--speed-max", gen_args.speed_max, "maximum speed, pixels/frame");
    gen->add_option("--seed", gen_args.seed, "generator seed");
    gen->add_option("--config", gen_args.config_path, "config file ([data] section)");
    gen->callback([&]() { rc = run_gen_data(*gen, gen_args); });

    TrainArgs train_args;
    auto* train = app.add_subcommand("train", "train a model");
    train->add_option("--data", train_args.data, "training dataset file")->required();
    train->add_option("--out-dir", train_args.out_dir, "checkpoint/trace directory")->required();
    train->add_option("--preset", train_args.preset,
                      "smmnist-like|sprites-like|mug-mmd|mug-gan");
    train->add_option("--config", train_args.config_path, "config file");
    train->add_option("--mode", train_args.mode, "mmd|gan");
    train->add_option("--weak-supervision", train_args.weak, "on|off");
    train->add_option("--epochs", train_args.epochs, "training epochs");
    train->add_option("--batch-size", train_args.batch_size, "sequences per batch");
    train->add_option("--inner-steps", train_args.inner_steps,
                      "critic/encoder updates per outer step");
    train->add_option("--beta1", train_args.beta1, "content penalty weight");
    train->add_option("--beta2", train_args.beta2, "motion penalty weight");
    train->add_option("--beta3", train_args.beta3, "categorical KL weight");
    train->add_option("--tau", train_args.tau, "Gumbel-softmax temperature");
    train->add_option("--lr-decoder", train_args.lr_decoder, "decoder/prior learning rate");
    train->add_option("--lr-encoder", train_args.lr_encoder, "encoder learning rate");
    train->add_option("--lr-critic", train_args.lr_critic, "critic learning rate");
    train->add_option("--seed", train_args.seed, "training seed");
    train->add_option("--save-every", train_args.save_every, "checkpoint every N epochs");
    train->add_option("--resume", train_args.resume, "checkpoint to resume from");
    train->callback([&]() { rc = run_train(*train, train_args); });

    EvalArgs eval_args;
    auto* evalc = app.add_subcommand("eval", "evaluate a checkpoint");
    evalc->add_option("--ckpt", eval_args.ckpt, "checkpoint file")->required();
    evalc->add_option("--data", eval_args.data, "labeled test dataset")->required();
    evalc->add_option("--train-data", eval_args.train_data,
                      "labeled data for classifier fitting (default: half of --data)");
    evalc->add_option("--out", eval_args.out, "report file")->required();
    evalc->add_option("--seed", eval_args.seed, "evaluation seed");
    evalc->add_option("--clf-epochs", eval_args.clf_epochs, "classifier training epochs");
    evalc->callback([&]() { rc = run_eval(*evalc, eval_args); });

    SwapArgs swap_args;
    auto* swapc = app.add_subcommand("swap", "content/motion swap grid for two sequences");
    swapc->add_option("--ckpt", swap_args.ckpt, "checkpoint file")->required();
    swapc->add_option("--data", swap_args.data, "dataset file")->required();
    swapc->add_option("--i", swap_args.i, "first sequence index")->required();
    swapc->add_option("--j", swap_args.j, "second sequence index")->required();
    swapc->add_option("--out-dir", swap_args.out_dir, "image output directory")->required();
    swapc->callback([&]() { rc = run_swap(*swapc, swap_args); });

    SampleArgs sample_args;
    auto* sample = app.add_subcommand("sample", "unconditional generation from the priors");
    sample->add_option("--ckpt", sample_args.ckpt, "checkpoint file")->required();
    sample->add_option("--count", sample_args.count, "number of samples");
    sample->add_option("--frames", sample_args.frames, "rollout length");
    sample->add_option("--out-dir", sample_args.out_dir, "image output directory")->required();
    sample->add_option("--seed", sample_args.seed, "sampling seed");
    sample->callback([&]() { rc = run_sample(*sample, sample_args); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const io_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const format_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const numeric_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const config_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return rc;
}
