#include <benchmark/benchmark.h>

#include "rwae/divergences.hpp"
#include "rwae/rng.hpp"

using namespace rwae;

namespace {

Matrix random_points(int n, int d, Rng& rng) {
    Matrix m(n, d);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) m(i, j) = rng.normal();
    }
    return m;
}

void BM_kernel_gram(benchmark::State& state) {
    Rng rng(1);
    const int n = int(state.range(0));
    Matrix x = random_points(n, 16, rng);
    Matrix y = random_points(n, 16, rng);
    KernelSpec k = KernelSpec::mixture_rbf({1, 2, 4, 8, 16});
    for (auto _ : state) {
        benchmark::DoNotOptimize(kernel_gram(x, y, k));
    }
}
BENCHMARK(BM_kernel_gram)->Arg(16)->Arg(32)->Arg(64)->Arg(128);

void BM_mmd2_unbiased(benchmark::State& state) {
    Rng rng(2);
    const int n = int(state.range(0));
    Matrix x = random_points(n, 16, rng);
    Matrix y = random_points(n, 16, rng);
    KernelSpec k = KernelSpec::mixture_rbf({1, 2, 4, 8, 16});
    for (auto _ : state) {
        benchmark::DoNotOptimize(mmd2_unbiased(x, y, k));
    }
}
BENCHMARK(BM_mmd2_unbiased)->Arg(16)->Arg(32)->Arg(64)->Arg(128);

void BM_mmd2_graph_backward(benchmark::State& state) {
    Rng rng(3);
    const int n = int(state.range(0));
    Var x = Var::param(random_points(n, 16, rng));
    Var y = Var::constant(random_points(n, 16, rng));
    KernelSpec k = KernelSpec::mixture_rbf({1, 2, 4, 8, 16});
    for (auto _ : state) {
        Gradients g = backward(mmd2_unbiased(x, y, k));
        benchmark::DoNotOptimize(g.at(x));
    }
}
BENCHMARK(BM_mmd2_graph_backward)->Arg(16)->Arg(32)->Arg(64);

void BM_scaled_mmd_penalty(benchmark::State& state) {
    Rng rng(4);
    const int n = int(state.range(0));
    Critic critic(16, {64, 64}, rng);
    Matrix post = random_points(n, 16, rng);
    Matrix prior = random_points(n, 16, rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(scaled_mmd_penalty_value(post, prior, critic));
    }
}
BENCHMARK(BM_scaled_mmd_penalty)->Arg(16)->Arg(32)->Arg(64);

void BM_gradient_norm_penalty(benchmark::State& state) {
    Rng rng(5);
    const int n = int(state.range(0));
    Critic critic(16, {64, 64}, rng);
    Matrix pts = random_points(n, 16, rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            gradient_norm_penalty_value(pts, [&](const Var& z) { return critic.prob(z); }));
    }
}
BENCHMARK(BM_gradient_norm_penalty)->Arg(16)->Arg(64);

} // namespace
