#pragma once

#include <string>
#include <vector>

#include "adrl/dataset.hpp"
#include "adrl/env.hpp"
#include "adrl/net.hpp"

namespace adrl {

enum class Variant { Dqn, Dueling, RobustDueling };

Variant parse_variant(const std::string& name);
std::string variant_name(Variant v);

// Which reward signal the TD targets scalarize. Per-objective agents are used
// when revenue and engagement effects must be reported separately.
enum class RewardMix { Scalarized, RevenueOnly, EngagementOnly };

struct AgentConfig {
    double gamma = 0.8;
    double delta = 0.0; // robustness radius; 0 reproduces the non-robust trainer exactly
    RegMode reg_mode = RegMode::AllButBias;
    double alpha = 1.0; // reward weight: r = r_rev + alpha * r_eng
    int target_sync_every = 100;
    int batch_size = 64;
    long long train_steps = 10000;
    std::vector<int> hidden = {64, 64};
    double initial_lr = 1e-4;
    int lr_cadence = 1;
    double momentum = 0.0;
    double grad_clip = 10.0;
    RewardMix reward_mix = RewardMix::Scalarized;
    std::uint64_t seed = 0;

    void validate() const;
};

// A minibatch ready for TD-target computation: normalized next states,
// scalarized rewards, and the terminal mask (1 = non-terminal).
struct TdBatch {
    Eigen::MatrixXd states;
    Eigen::VectorXi actions;
    Eigen::MatrixXd next_states;
    Eigen::VectorXd rewards;
    Eigen::VectorXd not_done;
};

TdBatch assemble_batch(const OfflineDataset& ds, const std::vector<std::size_t>& indices,
                       double alpha, RewardMix mix = RewardMix::Scalarized);

// y_i = r_i + gamma * max_a Q_target(s'_i, a); terminal transitions keep only r_i.
Eigen::VectorXd td_targets_dqn(const TdBatch& batch, const QNet& target, double gamma);

// y_i = r_i + gamma * V_target(s'_i) - gamma * delta * ||w_target||; terminal
// transitions drop both the bootstrap and the penalty. Requires a dueling head.
Eigen::VectorXd td_targets_robust(const TdBatch& batch, const QNet& target, double gamma,
                                  double delta, RegMode reg_mode);

struct TrainedAgent {
    QNet net;
    QNet target;
    Variant variant = Variant::Dueling;
    AgentConfig cfg;
    Normalization norm;
    std::vector<float> loss_trace;

    // Raw (unnormalized) states as rows; normalization is applied internally.
    Eigen::MatrixXd q_values(const Eigen::MatrixXd& raw_states) const;
    int greedy_action(const Eigen::VectorXd& raw_features) const;

    void save(const std::string& path) const;
    static TrainedAgent load(const std::string& path);
};

// Minibatch TD training on the offline corpus. Aborts with the offending step
// index if the loss goes non-finite.
TrainedAgent train_offline(const OfflineDataset& ds, const AgentConfig& cfg, Variant variant);

// One greedy episode; returns the cumulative scalarized reward.
double greedy_episode_return(Env& env, const TrainedAgent& agent, RandomStream& rng,
                             double alpha = 1.0);

// Online DQN used to provision a competent behavior policy for data
// collection. Trains on raw features; returns the best greedy snapshot.
struct OnlineDqnConfig {
    std::vector<int> hidden = {64, 64};
    double gamma = 0.99;
    double lr = 1e-3;
    double momentum = 0.9;
    int batch_size = 64;
    std::size_t buffer_capacity = 50000;
    std::size_t warmup_steps = 1000;
    double eps_start = 1.0;
    double eps_end = 0.05;
    long long eps_decay_steps = 5000;
    int target_sync_every = 500;
    long long max_env_steps = 60000;
    long long eval_every = 2500;
    int eval_episodes = 5;
    double stop_reward = 495.0;
    double grad_clip = 10.0;
};

QNet train_online_expert(Env& env, const OnlineDqnConfig& cfg, RandomStream& rng,
                         double* best_eval_return = nullptr);

} // namespace adrl
