#pragma once

#include <vector>

#include "adrl/env.hpp"

namespace adrl {

// Two ad-load levels.
inline constexpr int kAdLoadLow = 0;
inline constexpr int kAdLoadHigh = 1;

// Synthetic ad-session environment: a latent user-type mixture with
// mean-reverting engagement-level dynamics, a logistic engagement response
// with a sinusoidal time-of-day drift term, and a carryover penalty by which
// a previous high-ad-load session depresses both the next engagement feature
// and the next engagement response (residual fatigue).
//
// Feature layout (dim = 4 user/session features + 2 previous-action channels):
//   [0] base engagement of the user type
//   [1] monetization propensity of the user type
//   [2] current engagement level (mean-reverting)
//   [3] time of day, bucket/24
//   [4] previous action was low   (one-hot; both zero = no previous action)
//   [5] previous action was high
struct SessionEnvConfig {
    int n_user_types = 4;
    double carryover_strength = 0.1; // depression of next engagement level after `high`
    double drift_amplitude = 0.3;    // amplitude of the time-of-day response shift
    double episode_length_mean = 5.0;
    std::uint64_t rng_seed = 0; // seeds the per-type parameter palette

    void validate() const;
};

struct SessionStepDetail {
    StepOutcome outcome;
    double eng_response = 0.0; // noiseless engagement response in (0,1)
};

// One session transition. Pure given (state, action, cfg, time_bucket) up to
// the rng draws; everything the dynamics need is encoded in the state.
StepOutcome session_step(const EnvState& state, int action, const SessionEnvConfig& cfg,
                         int time_bucket, RandomStream& rng);

// Noiseless expected treatment effects at a state (high minus low), used as
// ground truth for ranking oracles.
double session_true_delta_rev(const EnvState& state, const SessionEnvConfig& cfg, int time_bucket);
double session_true_delta_eng(const EnvState& state, const SessionEnvConfig& cfg, int time_bucket);

class SessionEnv final : public Env {
public:
    explicit SessionEnv(SessionEnvConfig cfg = {});

    int state_dim() const override { return 6; }
    int n_actions() const override { return 2; }

    EnvState reset(RandomStream& rng) override;
    StepOutcome step(int action, RandomStream& rng) override;

    int time_bucket() const override { return time_bucket_; }
    const SessionEnvConfig& config() const { return cfg_; }

    // Per-type palette, exposed for generator-truth tests.
    const std::vector<double>& type_base_engagement() const { return base_eng_; }
    const std::vector<double>& type_monetization() const { return mon_prop_; }

private:
    SessionEnvConfig cfg_;
    std::vector<double> base_eng_;
    std::vector<double> mon_prop_;
    EnvState state_;
    int time_bucket_ = 0;
    bool episode_open_ = false;
};

} // namespace adrl
