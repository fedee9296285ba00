#include "adrl/cartpole.hpp"

#include <cmath>
#include <stdexcept>

namespace adrl {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kXThreshold = 2.4;
constexpr double kThetaThreshold = 12.0 * 2.0 * kPi / 360.0;
} // namespace

void CartPolePhysics::validate() const {
    if (force_mag <= 0.0) throw std::invalid_argument("cartpole: force_mag must be > 0");
    if (pole_length <= 0.0) throw std::invalid_argument("cartpole: pole_length must be > 0");
    if (action_flip_prob < 0.0 || action_flip_prob > 1.0)
        throw std::invalid_argument("cartpole: action_flip_prob must be in [0,1]");
    if (max_steps <= 0) throw std::invalid_argument("cartpole: max_steps must be > 0");
    if (time_step <= 0.0) throw std::invalid_argument("cartpole: time_step must be > 0");
}

StepOutcome cartpole_step(const EnvState& state, int action,
                          const CartPolePhysics& p, RandomStream& rng) {
    if (state.done) throw std::logic_error("cartpole_step: cannot step a terminal state");
    if (action != 0 && action != 1) throw std::invalid_argument("cartpole_step: action must be 0 or 1");
    if (state.features.size() != 4) throw std::invalid_argument("cartpole_step: state dimension must be 4");

    int applied = action;
    if (p.action_flip_prob > 0.0 && rng.bernoulli(p.action_flip_prob)) applied = 1 - applied;

    double x = state.features[0];
    double x_dot = state.features[1];
    double theta = state.features[2];
    double theta_dot = state.features[3];

    const double force = (applied == 1) ? p.force_mag : -p.force_mag;
    const double cos_theta = std::cos(theta);
    const double sin_theta = std::sin(theta);
    const double total_mass = p.cart_mass + p.pole_mass;
    const double polemass_length = p.pole_mass * p.pole_length;

    const double temp = (force + polemass_length * theta_dot * theta_dot * sin_theta) / total_mass;
    const double theta_acc = (p.gravity * sin_theta - cos_theta * temp) /
        (p.pole_length * (4.0 / 3.0 - p.pole_mass * cos_theta * cos_theta / total_mass));
    const double x_acc = temp - polemass_length * theta_acc * cos_theta / total_mass;

    x += p.time_step * x_dot;
    x_dot += p.time_step * x_acc;
    theta += p.time_step * theta_dot;
    theta_dot += p.time_step * theta_acc;

    StepOutcome out;
    out.next_state.features.resize(4);
    out.next_state.features << x, x_dot, theta, theta_dot;
    out.done = x < -kXThreshold || x > kXThreshold ||
               theta < -kThetaThreshold || theta > kThetaThreshold;
    out.next_state.done = out.done;
    out.reward_rev = 1.0;
    out.reward_eng = 0.0;
    return out;
}

CartPoleEnv::CartPoleEnv(CartPolePhysics physics) : physics_(physics) {
    physics_.validate();
}

EnvState CartPoleEnv::reset(RandomStream& rng) {
    state_.features.resize(4);
    for (int i = 0; i < 4; ++i) state_.features[i] = rng.uniform(-0.05, 0.05);
    state_.done = false;
    steps_taken_ = 0;
    episode_open_ = true;
    return state_;
}

StepOutcome CartPoleEnv::step(int action, RandomStream& rng) {
    if (!episode_open_) throw std::logic_error("CartPoleEnv: step before reset");
    StepOutcome out = cartpole_step(state_, action, physics_, rng);
    ++steps_taken_;
    if (steps_taken_ >= physics_.max_steps) {
        out.done = true;
        out.next_state.done = true;
    }
    state_ = out.next_state;
    if (out.done) episode_open_ = false;
    return out;
}

} // namespace adrl
