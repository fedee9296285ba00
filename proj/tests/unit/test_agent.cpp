#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "adrl/agent.hpp"
#include "adrl/session_env.hpp"

using namespace adrl;

namespace {

// One-hot style micro dataset: a single self-looping transition.
OfflineDataset single_transition_dataset(double reward) {
    Transition t;
    t.state = Eigen::VectorXd::Zero(2);
    t.state << 1.0, 0.0;
    t.next_state = t.state;
    t.action = 0;
    t.reward_rev = reward;
    t.done = false;
    return OfflineDataset::from_transitions({t}, 2, 2);
}

OfflineDataset tiny_session_dataset(std::size_t n, std::uint64_t seed) {
    SessionEnv env;
    BehaviorPolicy uniform;
    RandomStream rng(seed);
    return collect(env, uniform, n, rng);
}

TdBatch hand_batch() {
    // Three transitions with 2-d states; last one is terminal.
    TdBatch b;
    b.states.resize(3, 2);
    b.states << 1, 0, 0, 1, 1, 1;
    b.next_states = b.states;
    b.actions.resize(3);
    b.actions << 0, 1, 0;
    b.rewards.resize(3);
    b.rewards << 0.5, 1.0, -0.5;
    b.not_done.resize(3);
    b.not_done << 1.0, 1.0, 0.0;
    return b;
}

// Plain table net: q(s) = s * W^T with W = [[1,2],[3,4]].
QNet table_net() {
    RandomStream rng(1);
    QNet net = QNet::make(2, {}, 2, HeadKind::Plain, rng);
    auto p = net.parameter_ptrs();
    const double vals[] = {1, 2, 3, 4, 0, 0};
    for (std::size_t i = 0; i < p.size(); ++i) *p[i] = vals[i];
    return net;
}

// Dueling net with empty trunk, value head W = (1,2,2), b = 0, advantage zero.
QNet fixed_value_head_net() {
    RandomStream rng(2);
    QNet net = QNet::make(3, {}, 2, HeadKind::Dueling, rng);
    for (double* p : net.parameter_ptrs()) *p = 0.0;
    auto p = net.parameter_ptrs();
    *p[0] = 1.0;
    *p[1] = 2.0;
    *p[2] = 2.0;
    return net;
}

} // namespace

TEST_SUITE_BEGIN("agent");

TEST_CASE("gamma zero reduces targets to the scalarized reward") {
    const TdBatch b = hand_batch();
    const QNet target = table_net();
    const Eigen::VectorXd y = td_targets_dqn(b, target, 0.0);
    CHECK(y[0] == 0.5);
    CHECK(y[1] == 1.0);
    CHECK(y[2] == -0.5);
}

TEST_CASE("zero target net bootstraps nothing") {
    TdBatch b = hand_batch();
    b.rewards.setOnes();
    b.not_done.setOnes();
    RandomStream rng(3);
    QNet target = QNet::make(2, {4}, 2, HeadKind::Dueling, rng);
    for (double* p : target.parameter_ptrs()) *p = 0.0;
    const Eigen::VectorXd y = td_targets_dqn(b, target, 0.8);
    for (int i = 0; i < 3; ++i) CHECK(y[i] == 1.0);
}

TEST_CASE("dqn targets match hand arithmetic on a fixed table") {
    const TdBatch b = hand_batch();
    const QNet target = table_net();
    // q rows: (1,3), (2,4), (3,7); max = 3, 4, 7; terminal drops the bootstrap.
    const Eigen::VectorXd y = td_targets_dqn(b, target, 0.5);
    CHECK(y[0] == doctest::Approx(0.5 + 0.5 * 3.0).epsilon(1e-15));
    CHECK(y[1] == doctest::Approx(1.0 + 0.5 * 4.0).epsilon(1e-15));
    CHECK(y[2] == doctest::Approx(-0.5).epsilon(1e-15));
}

TEST_CASE("robust targets collapse to dqn targets at delta zero") {
    TdBatch b = hand_batch();
    b.states.conservativeResize(3, 3);
    b.states << 1, 0, 0, 0, 1, 0, 1, 1, 1;
    b.next_states = b.states;
    const QNet target = fixed_value_head_net();
    const Eigen::VectorXd y_dqn = td_targets_dqn(b, target, 0.8);
    const Eigen::VectorXd y_rob = td_targets_robust(b, target, 0.8, 0.0, RegMode::LastLayer);
    CHECK((y_dqn - y_rob).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("robust penalty subtracts gamma*delta*norm from non-terminal targets") {
    TdBatch b = hand_batch();
    b.states.conservativeResize(3, 3);
    b.states << 1, 0, 0, 0, 1, 0, 1, 1, 1;
    b.next_states = b.states;
    const QNet target = fixed_value_head_net(); // ||w_{2:d}|| = 3
    const Eigen::VectorXd base = td_targets_robust(b, target, 0.8, 0.0, RegMode::LastLayer);
    const Eigen::VectorXd pen = td_targets_robust(b, target, 0.8, 0.1, RegMode::LastLayer);
    CHECK(base[0] - pen[0] == doctest::Approx(0.24).epsilon(1e-12));
    CHECK(base[1] - pen[1] == doctest::Approx(0.24).epsilon(1e-12));
    CHECK(base[2] - pen[2] == 0.0); // terminal keeps neither bootstrap nor penalty

    // Monotonicity: larger delta lowers every non-terminal target by gamma*ddelta*norm.
    const Eigen::VectorXd pen2 = td_targets_robust(b, target, 0.8, 0.2, RegMode::LastLayer);
    CHECK(pen[0] - pen2[0] == doctest::Approx(0.8 * 0.1 * 3.0).epsilon(1e-12));

    CHECK_THROWS_AS(td_targets_robust(b, target, 0.8, -0.1, RegMode::LastLayer),
                    std::invalid_argument);
    CHECK_THROWS_AS(td_targets_robust(b, table_net(), 0.8, 0.1, RegMode::LastLayer),
                    std::invalid_argument);
}

TEST_CASE("training with zero learning rate leaves parameters untouched") {
    const OfflineDataset ds = tiny_session_dataset(200, 5);
    AgentConfig cfg;
    cfg.train_steps = 25;
    cfg.initial_lr = 0.0;
    cfg.seed = 9;
    const TrainedAgent trained = train_offline(ds, cfg, Variant::Dueling);
    AgentConfig zero_steps = cfg;
    zero_steps.train_steps = 0;
    const TrainedAgent init = train_offline(ds, zero_steps, Variant::Dueling);
    CHECK(trained.net.max_param_difference(init.net) == 0.0);
}

TEST_CASE("single-transition bandit regression converges to its reward") {
    const OfflineDataset ds = single_transition_dataset(0.7);
    AgentConfig cfg;
    cfg.gamma = 0.0;
    cfg.train_steps = 1500;
    cfg.initial_lr = 0.05;
    cfg.batch_size = 1;
    cfg.hidden = {8};
    cfg.seed = 11;
    const TrainedAgent agent = train_offline(ds, cfg, Variant::Dueling);
    const Eigen::MatrixXd q = agent.q_values(ds[0].state.transpose());
    CHECK(std::abs(q(0, 0) - 0.7) < 1e-3);
}

TEST_CASE("identical seeds reproduce training bit for bit") {
    const OfflineDataset ds = tiny_session_dataset(300, 6);
    AgentConfig cfg;
    cfg.train_steps = 60;
    cfg.initial_lr = 1e-3;
    cfg.seed = 12;
    const TrainedAgent a = train_offline(ds, cfg, Variant::RobustDueling);
    const TrainedAgent b = train_offline(ds, cfg, Variant::RobustDueling);
    CHECK(a.net.max_param_difference(b.net) == 0.0);
}

TEST_CASE("robust trainer at delta zero matches the dueling trainer exactly") {
    const OfflineDataset ds = tiny_session_dataset(300, 7);
    AgentConfig cfg;
    cfg.train_steps = 200;
    cfg.initial_lr = 1e-3;
    cfg.delta = 0.0;
    cfg.seed = 13;
    const TrainedAgent dueling = train_offline(ds, cfg, Variant::Dueling);
    const TrainedAgent robust = train_offline(ds, cfg, Variant::RobustDueling);
    CHECK(robust.net.max_param_difference(dueling.net) <= 1e-10);
}

TEST_CASE("targets are constant between target syncs") {
    const OfflineDataset ds = tiny_session_dataset(300, 8);
    AgentConfig cfg;
    cfg.train_steps = 50;
    cfg.target_sync_every = 1000000; // never syncs within the run
    cfg.initial_lr = 1e-3;
    cfg.seed = 14;
    const TrainedAgent agent = train_offline(ds, cfg, Variant::Dueling);
    AgentConfig zero = cfg;
    zero.train_steps = 0;
    const TrainedAgent init = train_offline(ds, zero, Variant::Dueling);
    // The frozen target still equals the initial parameters.
    CHECK(agent.target.max_param_difference(init.net) == 0.0);
    CHECK(agent.net.max_param_difference(init.net) > 0.0);
}

TEST_CASE("non-finite loss aborts with the step index") {
    Transition t;
    t.state = Eigen::VectorXd::Zero(1);
    t.next_state = t.state;
    t.reward_rev = 1e308;
    t.done = true;
    const OfflineDataset ds = OfflineDataset::from_transitions({t}, 1, 2);
    AgentConfig cfg;
    cfg.train_steps = 5;
    cfg.batch_size = 1;
    cfg.seed = 15;
    CHECK_THROWS_WITH_AS(train_offline(ds, cfg, Variant::Dueling),
                         doctest::Contains("step 0"), std::runtime_error);
}

TEST_CASE("q_values is pure and consistent with the dueling identity") {
    const OfflineDataset ds = tiny_session_dataset(300, 9);
    AgentConfig cfg;
    cfg.train_steps = 100;
    cfg.initial_lr = 1e-3;
    cfg.seed = 16;
    const TrainedAgent agent = train_offline(ds, cfg, Variant::Dueling);

    Eigen::MatrixXd states(2, ds.state_dim());
    states.row(0) = ds[0].state.transpose();
    states.row(1) = ds[0].state.transpose();
    const Eigen::MatrixXd q = agent.q_values(states);
    CHECK(q.row(0) == q.row(1));

    const ForwardPass fp = agent.net.forward(agent.norm.apply_rows(states));
    for (int i = 0; i < 2; ++i) CHECK(q.row(i).maxCoeff() == fp.v[i]);
}

TEST_CASE("agents round-trip through checkpoints") {
    const OfflineDataset ds = tiny_session_dataset(300, 10);
    AgentConfig cfg;
    cfg.train_steps = 40;
    cfg.delta = 1e-4;
    cfg.seed = 17;
    const TrainedAgent agent = train_offline(ds, cfg, Variant::RobustDueling);
    const auto path = (std::filesystem::temp_directory_path() / "adrl_agent.orlw").string();
    agent.save(path);
    const TrainedAgent back = TrainedAgent::load(path);
    CHECK(back.net.max_param_difference(agent.net) == 0.0);
    CHECK(back.cfg.delta == 1e-4);
    CHECK(back.variant == Variant::RobustDueling);
    CHECK(back.norm.mean == agent.norm.mean);

    Eigen::MatrixXd states(1, ds.state_dim());
    states.row(0) = ds[5].state.transpose();
    CHECK(back.q_values(states) == agent.q_values(states));
}

TEST_CASE("config validation rejects bad values") {
    AgentConfig cfg;
    cfg.delta = -1.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = {};
    cfg.gamma = 1.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = {};
    cfg.alpha = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

    // Non-robust variants must not silently absorb a robustness radius.
    const OfflineDataset ds = tiny_session_dataset(50, 11);
    AgentConfig with_delta;
    with_delta.delta = 0.1;
    with_delta.train_steps = 1;
    CHECK_THROWS_AS(train_offline(ds, with_delta, Variant::Dueling), std::invalid_argument);
}

TEST_SUITE_END();
