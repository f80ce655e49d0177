#include <benchmark/benchmark.h>

#include "qem/cumulative.hpp"
#include "qem/noise_model.hpp"
#include "qem/ptm.hpp"
#include "qem/simulator.hpp"

namespace {

qem::LayeredCircuit noisy_trotter(std::size_t qubits, std::size_t steps) {
    qem::DecoherenceSpec spec;
    spec.seed = 7;
    return qem::attach_noise(
        qem::compile(qem::build_ising_trotter(qubits, 0.6, 1.0, 1.0, steps)),
        spec);
}

void BM_NoisySimulate(benchmark::State& state) {
    const auto circuit = noisy_trotter(std::size_t(state.range(0)), 5);
    for (auto _ : state) {
        benchmark::DoNotOptimize(qem::simulate(circuit, qem::SimMode::Noisy));
    }
}
BENCHMARK(BM_NoisySimulate)->Arg(3)->Arg(4)->Arg(5);

void BM_CumulativeRecursion(benchmark::State& state) {
    const auto circuit = noisy_trotter(3, std::size_t(state.range(0)));
    for (auto _ : state) {
        auto acc = qem::CumulativeNoiseState::initial(3);
        for (const auto& layer : circuit.layers) {
            acc = qem::accumulate_noise(acc, layer);
        }
        benchmark::DoNotOptimize(acc);
    }
}
BENCHMARK(BM_CumulativeRecursion)->Arg(2)->Arg(5);

void BM_MndBisection(benchmark::State& state) {
    std::mt19937_64 rng(11);
    const auto channel = qem::PauliChannel::random(2, 0.05, rng);
    const auto ptm = qem::ptm_from_channel(channel);
    for (auto _ : state) {
        benchmark::DoNotOptimize(qem::mnd(ptm));
    }
}
BENCHMARK(BM_MndBisection);

}  // namespace

BENCHMARK_MAIN();
