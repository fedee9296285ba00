#pragma once

#include "adrl/env.hpp"

namespace adrl {

// Physical parameters of the cart-pole system. Nominal values reproduce the
// standard CartPole-v1 dynamics (Euler integration, dt = 0.02 s).
// `action_flip_prob` models actuator noise: with that probability the applied
// action is inverted before the dynamics update.
struct CartPolePhysics {
    double gravity = 9.8;
    double cart_mass = 1.0;
    double pole_mass = 0.1;
    double pole_length = 0.5; // half the pole's length (m)
    double force_mag = 10.0;  // N
    double time_step = 0.02;  // s
    double action_flip_prob = 0.0;
    int max_steps = 500;

    void validate() const;
};

// One dynamics update on an explicit state. Pure up to the action-flip draw;
// `done` reflects the position/angle thresholds only (|x| > 2.4, |theta| > 12 deg).
// Step-count truncation is handled by CartPoleEnv.
StepOutcome cartpole_step(const EnvState& state, int action,
                          const CartPolePhysics& physics, RandomStream& rng);

class CartPoleEnv final : public Env {
public:
    explicit CartPoleEnv(CartPolePhysics physics = {});

    int state_dim() const override { return 4; }
    int n_actions() const override { return 2; }

    EnvState reset(RandomStream& rng) override;
    StepOutcome step(int action, RandomStream& rng) override;

    const CartPolePhysics& physics() const { return physics_; }
    CartPolePhysics& physics() { return physics_; }
    int steps_taken() const { return steps_taken_; }

private:
    CartPolePhysics physics_;
    EnvState state_;
    int steps_taken_ = 0;
    bool episode_open_ = false;
};

} // namespace adrl
