#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "adrl/env.hpp"
#include "adrl/rng.hpp"

namespace adrl {

struct Transition {
    std::uint64_t episode_id = 0;
    std::uint32_t step_index = 0;
    Eigen::VectorXd state;
    std::uint32_t action = 0;
    double reward_rev = 0.0;
    double reward_eng = 0.0;
    Eigen::VectorXd next_state;
    bool done = false;
    std::uint32_t time_bucket = 0;
};

// Per-feature standardization statistics. Fitted on a training corpus and
// applied to everything evaluated against the model trained on it.
struct Normalization {
    Eigen::VectorXd mean;
    Eigen::VectorXd stddev; // floored at kStdFloor
    bool fitted = false;

    static constexpr double kStdFloor = 1e-8;

    Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
    Eigen::MatrixXd apply_rows(const Eigen::MatrixXd& rows) const;
};

// Immutable offline transition corpus. Ordering is episode-contiguous;
// records never change after construction or load.
class OfflineDataset {
public:
    OfflineDataset() = default;

    // Validates invariants and fits normalization over the given records.
    static OfflineDataset from_transitions(std::vector<Transition> transitions,
                                           int state_dim, int n_actions);

    std::size_t size() const { return transitions_.size(); }
    bool empty() const { return transitions_.empty(); }
    const Transition& operator[](std::size_t i) const { return transitions_[i]; }
    const std::vector<Transition>& transitions() const { return transitions_; }

    int state_dim() const { return state_dim_; }
    int n_actions() const { return n_actions_; }
    const Normalization& normalization() const { return norm_; }

    std::vector<std::uint64_t> episode_ids() const;

    // Copy carrying statistics fitted elsewhere (a training split).
    OfflineDataset with_normalization(const Normalization& norm) const;

    // Copy with the given feature indices removed from state and next_state;
    // normalization is refit on the reduced features.
    OfflineDataset with_features_dropped(const std::vector<int>& feature_indices) const;

    void save(const std::string& path) const;
    static OfflineDataset load(const std::string& path);
    void save_csv(const std::string& path) const;

private:
    std::vector<Transition> transitions_;
    int state_dim_ = 0;
    int n_actions_ = 0;
    Normalization norm_;
};

// Behavior policy for data collection: (1 - epsilon) * base + epsilon * uniform.
// A null `greedy` callback means the base itself is uniform-random.
struct BehaviorPolicy {
    std::function<int(const Eigen::VectorXd&)> greedy;
    double epsilon = 1.0;

    int act(const Eigen::VectorXd& features, int n_actions, RandomStream& rng) const;
};

// Rolls the behavior policy in `env` until exactly n_samples transitions are
// recorded. Episodes are contiguous; the final episode may be cut short at the
// sample budget. An environment failure aborts with the partial count in the
// error message rather than returning truncated data.
OfflineDataset collect(Env& env, const BehaviorPolicy& policy, std::size_t n_samples,
                       RandomStream& rng);

// Record-level time split: train takes time_bucket < cut_bucket, test the rest.
// Normalization is refit on train and shared with test. Empty side is an error.
std::pair<OfflineDataset, OfflineDataset> split_by_time(const OfflineDataset& ds, int cut_bucket);

// Episode-level random split; floor(train_fraction * n_episodes) episodes go to
// train so next-state targets never straddle the boundary.
std::pair<OfflineDataset, OfflineDataset> split_random(const OfflineDataset& ds,
                                                       double train_fraction, RandomStream& rng);

// Uniform sampling with replacement; returns record indices.
std::vector<std::size_t> sample_batch(const OfflineDataset& ds, std::size_t batch_size,
                                      RandomStream& rng);

} // namespace adrl
