#pragma once

#include <Eigen/Core>

#include "adrl/rng.hpp"

namespace adrl {

struct EnvState {
    Eigen::VectorXd features;
    bool done = false;
};

struct StepOutcome {
    EnvState next_state;
    double reward_rev = 0.0;
    double reward_eng = 0.0;
    bool done = false;
};

// Episodic two-reward environment. Instances are stateful (they track the
// current episode) and single-threaded; run many instances for parallelism.
class Env {
public:
    virtual ~Env() = default;

    virtual int state_dim() const = 0;
    virtual int n_actions() const = 0;

    // Starts a new episode and returns its initial (non-terminal) state.
    virtual EnvState reset(RandomStream& rng) = 0;

    // Advances the current episode. Stepping after termination is a contract
    // violation and throws; callers must reset explicitly.
    virtual StepOutcome step(int action, RandomStream& rng) = 0;

    // Time-of-day bucket of the current episode (0 for untimed environments).
    virtual int time_bucket() const { return 0; }
};

} // namespace adrl
