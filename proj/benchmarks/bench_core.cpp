#include <benchmark/benchmark.h>

#include "mutexnet/losses.hpp"
#include "mutexnet/nn.hpp"
#include "mutexnet/tensor.hpp"

using namespace mutexnet;

static void BM_Matmul(benchmark::State& state) {
    const std::size_t n = state.range(0);
    Rng rng(1);
    const Tensor a = rand_uniform(rng, {n, n}, -1.0, 1.0);
    const Tensor b = rand_uniform(rng, {n, n}, -1.0, 1.0);
    for (auto _ : state) {
        Tensor c = matmul(a, b);
        benchmark::DoNotOptimize(c.data());
    }
    state.SetItemsProcessed(state.iterations() * 2 * n * n * n);
}
BENCHMARK(BM_Matmul)->Arg(64)->Arg(256)->Arg(512);

static void BM_DenseForwardBackward(benchmark::State& state) {
    const std::size_t batch = state.range(0);
    Rng rng(2);
    Network net = make_preset("mnist-dense", rng);
    const Tensor x = rand_uniform(rng, {batch, 784}, 0.0, 1.0);
    std::vector<int> y(batch);
    for (std::size_t i = 0; i < batch; ++i) y[i] = static_cast<int>(i % 10);
    for (auto _ : state) {
        auto [f, cache] = forward(net, x);
        const LossResult loss = cross_entropy_loss(f, y, Head::sigmoid);
        GradientSet grads = backward(net, cache, loss.grad);
        benchmark::DoNotOptimize(grads.per_layer.data());
    }
    state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_DenseForwardBackward)->Arg(64)->Arg(256);

static void BM_Conv2dForward(benchmark::State& state) {
    Rng rng(3);
    Conv2dLayer conv(1, 20, 7, 7, rng);
    const Tensor x = rand_uniform(rng, {8, 1, 28, 28}, 0.0, 1.0);
    for (auto _ : state) {
        Tensor y = conv.forward(x);
        benchmark::DoNotOptimize(y.data());
    }
    state.SetItemsProcessed(state.iterations() * 8);
}
BENCHMARK(BM_Conv2dForward);

static void BM_MutexLoss(benchmark::State& state) {
    const std::size_t K = state.range(0);
    Rng rng(4);
    const Tensor f = rand_uniform(rng, {256, K}, 0.0, 1.0);
    for (auto _ : state) {
        LossResult r = mutex_loss(f);
        benchmark::DoNotOptimize(r.value);
        benchmark::DoNotOptimize(r.grad.data());
    }
    state.SetItemsProcessed(state.iterations() * 256);
}
BENCHMARK(BM_MutexLoss)->Arg(3)->Arg(10)->Arg(100);

static void BM_EntropyLoss(benchmark::State& state) {
    Rng rng(5);
    std::vector<double> p(256 * 10);
    for (std::size_t r = 0; r < 256; ++r) {
        double sum = 0.0;
        for (std::size_t k = 0; k < 10; ++k) {
            p[r * 10 + k] = rng.next_double() + 1e-3;
            sum += p[r * 10 + k];
        }
        for (std::size_t k = 0; k < 10; ++k) p[r * 10 + k] /= sum;
    }
    const Tensor f({256, 10}, p);
    for (auto _ : state) {
        LossResult r = entropy_loss(f);
        benchmark::DoNotOptimize(r.value);
    }
    state.SetItemsProcessed(state.iterations() * 256);
}
BENCHMARK(BM_EntropyLoss);

BENCHMARK_MAIN();
