#include <benchmark/benchmark.h>

#include "adrl/net.hpp"

using namespace adrl;

namespace {

QNet make_net(int width) {
    RandomStream rng(1);
    return QNet::make(6, {width, width}, 2, HeadKind::Dueling, rng);
}

void ForwardBatch(benchmark::State& state) {
    QNet net = make_net(static_cast<int>(state.range(0)));
    RandomStream rng(2);
    Eigen::MatrixXd states(64, 6);
    for (int i = 0; i < states.size(); ++i) states.data()[i] = rng.normal();
    for (auto _ : state) {
        benchmark::DoNotOptimize(net.q_values(states));
    }
    state.SetItemsProcessed(state.iterations() * 64);
}
BENCHMARK(ForwardBatch)->Arg(64)->Arg(256);

void ForwardBackwardBatch(benchmark::State& state) {
    QNet net = make_net(static_cast<int>(state.range(0)));
    RandomStream rng(3);
    Eigen::MatrixXd states(64, 6), dq(64, 2);
    for (int i = 0; i < states.size(); ++i) states.data()[i] = rng.normal();
    for (int i = 0; i < dq.size(); ++i) dq.data()[i] = rng.normal();
    for (auto _ : state) {
        const ForwardPass fp = net.forward(states);
        benchmark::DoNotOptimize(net.backward(fp, dq));
    }
    state.SetItemsProcessed(state.iterations() * 64);
}
BENCHMARK(ForwardBackwardBatch)->Arg(64)->Arg(256);

} // namespace
