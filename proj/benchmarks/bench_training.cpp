#include <benchmark/benchmark.h>

#include "rwae/train.hpp"

using namespace rwae;

namespace {

SequenceDataset bench_data() {
    GeneratorConfig gc;
    gc.count = 256;
    gc.seed = 9;
    return generate_dataset(gc);
}

TrainConfig bench_config() {
    TrainConfig cfg = preset_smmnist_like();
    cfg.batch_size = 16;
    cfg.seed = 1;
    cfg.frame_channels = 1;
    cfg.frame_height = 16;
    cfg.frame_width = 16;
    return cfg;
}

void BM_generate_dataset(benchmark::State& state) {
    GeneratorConfig gc;
    gc.count = int(state.range(0));
    gc.seed = 5;
    for (auto _ : state) {
        benchmark::DoNotOptimize(generate_dataset(gc));
    }
}
BENCHMARK(BM_generate_dataset)->Arg(256)->Arg(1024);

void BM_rwae_loss_forward(benchmark::State& state) {
    SequenceDataset data = bench_data();
    TrainConfig cfg = bench_config();
    Rng mrng(cfg.seed);
    RWAEModel model(cfg.model_config(), mrng);
    std::vector<std::int64_t> idx(std::size_t(cfg.batch_size));
    for (int i = 0; i < cfg.batch_size; ++i) idx[std::size_t(i)] = i;
    SequenceBatch batch = make_batch(data, idx);
    Rng rng(2);
    for (auto _ : state) {
        benchmark::DoNotOptimize(rwae_loss(model, batch, cfg, rng));
    }
}
BENCHMARK(BM_rwae_loss_forward);

void BM_rwae_loss_backward(benchmark::State& state) {
    SequenceDataset data = bench_data();
    TrainConfig cfg = bench_config();
    Rng mrng(cfg.seed);
    RWAEModel model(cfg.model_config(), mrng);
    std::vector<std::int64_t> idx(std::size_t(cfg.batch_size));
    for (int i = 0; i < cfg.batch_size; ++i) idx[std::size_t(i)] = i;
    SequenceBatch batch = make_batch(data, idx);
    Rng rng(3);
    for (auto _ : state) {
        LossGraph loss = rwae_loss(model, batch, cfg, rng);
        Gradients g = backward(loss.total);
        benchmark::DoNotOptimize(g);
    }
}
BENCHMARK(BM_rwae_loss_backward);

void BM_train_epoch(benchmark::State& state) {
    SequenceDataset data = bench_data();
    TrainConfig cfg = bench_config();
    cfg.epochs = 1000000; // epochs driven manually below
    for (auto _ : state) {
        state.PauseTiming();
        Trainer trainer(data, cfg);
        state.ResumeTiming();
        trainer.run_epoch();
    }
}
BENCHMARK(BM_train_epoch)->Unit(benchmark::kMillisecond);

} // namespace
