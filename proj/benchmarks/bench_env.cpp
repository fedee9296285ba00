#include <benchmark/benchmark.h>

#include "adrl/cartpole.hpp"
#include "adrl/session_env.hpp"

using namespace adrl;

namespace {

void CartPoleSteps(benchmark::State& state) {
    CartPoleEnv env;
    RandomStream rng(1);
    EnvState s = env.reset(rng);
    int t = 0;
    for (auto _ : state) {
        if (s.done) s = env.reset(rng);
        const StepOutcome out = env.step(t++ % 2, rng);
        s = out.next_state;
        benchmark::DoNotOptimize(s.features.data());
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(CartPoleSteps);

void SessionSteps(benchmark::State& state) {
    SessionEnv env;
    RandomStream rng(2);
    EnvState s = env.reset(rng);
    int t = 0;
    for (auto _ : state) {
        if (s.done) s = env.reset(rng);
        const StepOutcome out = env.step(t++ % 2, rng);
        s = out.next_state;
        benchmark::DoNotOptimize(s.features.data());
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(SessionSteps);

} // namespace
