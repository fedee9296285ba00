#include <benchmark/benchmark.h>

#include "adrl/robust_linear.hpp"
#include "adrl/tree.hpp"
#include "adrl/uplift.hpp"

using namespace adrl;

namespace {

void CostCurve100k(benchmark::State& state) {
    RandomStream rng(1);
    std::vector<RankedUnit> units(100000);
    for (std::size_t i = 0; i < units.size(); ++i) {
        units[i].unit_id = i;
        units[i].score = rng.normal();
        units[i].treated = rng.bernoulli(0.5);
        units[i].observed_rev = 1.0 + (units[i].treated ? 0.5 : 0.0) + rng.normal();
        units[i].observed_eng = 2.0 - (units[i].treated ? 0.3 : 0.0) + rng.normal();
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(cost_curve(units, 100).aucc);
    }
    state.SetItemsProcessed(state.iterations() * static_cast<long>(units.size()));
}
BENCHMARK(CostCurve100k);

void RobustBellmanApply(benchmark::State& state) {
    RandomStream rng(2);
    LinearRmdp mdp = LinearRmdp::random_tabular(6, 2, 0.8, 1e-3, rng);
    Eigen::MatrixXd q = Eigen::MatrixXd::Random(6, 2).cwiseAbs();
    for (auto _ : state) {
        benchmark::DoNotOptimize(robust_bellman_apply(q, mdp).q);
    }
}
BENCHMARK(RobustBellmanApply);

void TreeFit50k(benchmark::State& state) {
    RandomStream rng(3);
    Eigen::MatrixXd X(50000, 6);
    Eigen::VectorXd y(50000);
    for (int i = 0; i < X.rows(); ++i) {
        for (int j = 0; j < 6; ++j) X(i, j) = rng.uniform(-1, 1);
        y[i] = X(i, 0) * 0.5 - X(i, 3) + 0.1 * rng.normal();
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(RegressionTree::fit(X, y, 8, 50).n_leaves());
    }
}
BENCHMARK(TreeFit50k);

} // namespace
