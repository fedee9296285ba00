#include "adrl/session_env.hpp"

#include <cmath>
#include <stdexcept>

namespace adrl {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kRevBase = 0.4;       // revenue multiplier at low ad load
constexpr double kRevGain = 0.6;       // extra revenue multiplier at high ad load
constexpr double kEngSlope = 4.0;      // logistic slope of the engagement response
constexpr double kEngAdCost = 0.35;    // response shift caused by high ad load
constexpr double kFatigueShare = 0.5;  // share of carryover acting on the response
constexpr double kMeanReversion = 0.5; // pull of the engagement level toward its base
constexpr double kLevelNoise = 0.15;
constexpr double kRewardNoise = 0.1;

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double drift_shift(const SessionEnvConfig& cfg, int time_bucket) {
    return cfg.drift_amplitude * std::sin(2.0 * kPi * static_cast<double>(time_bucket) / 24.0);
}

double engagement_response(double level, double drift, int action, double fatigue) {
    return sigmoid(kEngSlope * (level + drift - kEngAdCost * action - kFatigueShare * fatigue));
}

// Engaged users consume more of the feed, so ad revenue scales smoothly with
// the current engagement level as well as the user's monetization propensity.
double revenue_response(double mon, double level, double drift, int action) {
    return mon * (kRevBase + kRevGain * action) * (0.5 + 0.5 * sigmoid(3.0 * (level + drift - 0.45)));
}

} // namespace

void SessionEnvConfig::validate() const {
    if (n_user_types < 1) throw std::invalid_argument("session: n_user_types must be >= 1");
    if (carryover_strength < 0.0) throw std::invalid_argument("session: carryover_strength must be >= 0");
    if (drift_amplitude < 0.0) throw std::invalid_argument("session: drift_amplitude must be >= 0");
    if (episode_length_mean <= 0.0) throw std::invalid_argument("session: episode_length_mean must be > 0");
}

StepOutcome session_step(const EnvState& state, int action, const SessionEnvConfig& cfg,
                         int time_bucket, RandomStream& rng) {
    if (state.done) throw std::logic_error("session_step: cannot step a terminal state");
    if (action != kAdLoadLow && action != kAdLoadHigh)
        throw std::invalid_argument("session_step: action must be low (0) or high (1)");
    if (state.features.size() != 6) throw std::invalid_argument("session_step: state dimension must be 6");

    const double base = state.features[0];
    const double mon = state.features[1];
    const double level = state.features[2];
    const double time_norm = state.features[3];
    const double prev_high = state.features[5];

    const double fatigue = cfg.carryover_strength * prev_high;
    const double drift = drift_shift(cfg, time_bucket);

    StepOutcome out;
    out.reward_rev = revenue_response(mon, level, drift, action) + rng.normal(0.0, kRewardNoise);
    out.reward_eng = engagement_response(level, drift, action, fatigue) + rng.normal(0.0, kRewardNoise);

    double next_level = base + kMeanReversion * (level - base) -
                        cfg.carryover_strength * action + rng.normal(0.0, kLevelNoise);

    out.next_state.features.resize(6);
    out.next_state.features << base, mon, next_level, time_norm,
        (action == kAdLoadLow ? 1.0 : 0.0), (action == kAdLoadHigh ? 1.0 : 0.0);
    out.done = rng.bernoulli(1.0 / cfg.episode_length_mean);
    out.next_state.done = out.done;
    return out;
}

double session_true_delta_rev(const EnvState& state, const SessionEnvConfig& cfg, int time_bucket) {
    const double drift = drift_shift(cfg, time_bucket);
    return revenue_response(state.features[1], state.features[2], drift, kAdLoadHigh) -
           revenue_response(state.features[1], state.features[2], drift, kAdLoadLow);
}

double session_true_delta_eng(const EnvState& state, const SessionEnvConfig& cfg, int time_bucket) {
    const double level = state.features[2];
    const double fatigue = cfg.carryover_strength * state.features[5];
    const double drift = drift_shift(cfg, time_bucket);
    return engagement_response(level, drift, kAdLoadHigh, fatigue) -
           engagement_response(level, drift, kAdLoadLow, fatigue);
}

SessionEnv::SessionEnv(SessionEnvConfig cfg) : cfg_(cfg) {
    cfg_.validate();
    // Fixed per-type palette: base engagement spaced over [0.35, 0.65],
    // monetization propensity drawn over [0.4, 0.9] so the two are decorrelated.
    RandomStream palette(cfg_.rng_seed ^ 0xAD10ADULL);
    const int k = cfg_.n_user_types;
    base_eng_.resize(k);
    mon_prop_.resize(k);
    for (int u = 0; u < k; ++u) {
        base_eng_[u] = (k == 1) ? 0.5 : 0.35 + 0.3 * static_cast<double>(u) / (k - 1);
        mon_prop_[u] = palette.uniform(0.25, 1.0);
    }
}

EnvState SessionEnv::reset(RandomStream& rng) {
    const int type = rng.uniform_int(0, cfg_.n_user_types - 1);
    time_bucket_ = rng.uniform_int(0, 23);

    state_.features.resize(6);
    // Monetization propensity scatters around the type's center so the
    // population is a mixture rather than four point masses.
    const double mon = mon_prop_[type] + rng.uniform(-0.1, 0.1);
    state_.features << base_eng_[type], mon,
        base_eng_[type] + rng.normal(0.0, kLevelNoise),
        static_cast<double>(time_bucket_) / 24.0,
        0.0, 0.0; // no previous action
    state_.done = false;
    episode_open_ = true;
    return state_;
}

StepOutcome SessionEnv::step(int action, RandomStream& rng) {
    if (!episode_open_) throw std::logic_error("SessionEnv: step before reset");
    StepOutcome out = session_step(state_, action, cfg_, time_bucket_, rng);
    state_ = out.next_state;
    if (out.done) episode_open_ = false;
    return out;
}

} // namespace adrl
