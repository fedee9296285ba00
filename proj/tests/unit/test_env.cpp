#include <doctest.h>

#include <cmath>

#include "adrl/cartpole.hpp"
#include "adrl/session_env.hpp"

using namespace adrl;

namespace {

// Independent Euler integrator of the published cart-pole equations, kept
// separate from the implementation it checks.
struct RefCartPole {
    double x = 0, x_dot = 0, theta = 0, theta_dot = 0;

    void step(int action) {
        const double gravity = 9.8, masscart = 1.0, masspole = 0.1, length = 0.5;
        const double force_mag = 10.0, tau = 0.02;
        const double total_mass = masscart + masspole;
        const double polemass_length = masspole * length;
        const double force = action == 1 ? force_mag : -force_mag;
        const double costh = std::cos(theta), sinth = std::sin(theta);
        const double temp = (force + polemass_length * theta_dot * theta_dot * sinth) / total_mass;
        const double thetaacc = (gravity * sinth - costh * temp) /
            (length * (4.0 / 3.0 - masspole * costh * costh / total_mass));
        const double xacc = temp - polemass_length * thetaacc * costh / total_mass;
        x += tau * x_dot;
        x_dot += tau * xacc;
        theta += tau * theta_dot;
        theta_dot += tau * thetaacc;
    }

    bool failed() const {
        return x < -2.4 || x > 2.4 || theta < -12.0 * 2.0 * M_PI / 360.0 ||
               theta > 12.0 * 2.0 * M_PI / 360.0;
    }
};

EnvState make_state(double x, double xd, double th, double thd) {
    EnvState s;
    s.features.resize(4);
    s.features << x, xd, th, thd;
    s.done = false;
    return s;
}

} // namespace

TEST_SUITE_BEGIN("env");

TEST_CASE("cartpole origin step is rewarded and non-terminal") {
    RandomStream rng(1);
    CartPolePhysics physics;
    const StepOutcome out = cartpole_step(make_state(0, 0, 0, 0), 0, physics, rng);
    CHECK(out.reward_rev == 1.0);
    CHECK(out.reward_eng == 0.0);
    CHECK_FALSE(out.done);
    const StepOutcome out1 = cartpole_step(make_state(0, 0, 0, 0), 1, physics, rng);
    CHECK(out1.reward_rev == 1.0);
    CHECK_FALSE(out1.done);
}

TEST_CASE("zero flip probability reproduces nominal dynamics exactly") {
    CartPolePhysics nominal;
    CartPolePhysics with_flip = nominal;
    with_flip.action_flip_prob = 0.0;

    CartPoleEnv env_a(nominal), env_b(with_flip);
    RandomStream rng_a(42), rng_b(42);
    EnvState sa = env_a.reset(rng_a);
    EnvState sb = env_b.reset(rng_b);
    REQUIRE(sa.features == sb.features);
    for (int t = 0; t < 100 && !sa.done; ++t) {
        const int action = t % 2;
        const StepOutcome oa = env_a.step(action, rng_a);
        const StepOutcome ob = env_b.step(action, rng_b);
        CHECK(oa.next_state.features == ob.next_state.features);
        CHECK(oa.done == ob.done);
        sa = oa.next_state;
        sb = ob.next_state;
        if (oa.done) break;
    }
}

TEST_CASE("sustained push from a tilted start fails when the reference does") {
    RefCartPole ref;
    ref.theta = 0.20;
    int ref_steps = 0;
    while (!ref.failed() && ref_steps < 500) {
        ref.step(0);
        ++ref_steps;
    }
    REQUIRE(ref_steps < 500); // the reference falls within the horizon

    const CartPolePhysics physics;
    EnvState state = make_state(0, 0, 0.20, 0);
    int steps = 0;
    bool done = false;
    RandomStream step_rng(4);
    while (!done && steps < 500) {
        const StepOutcome out = cartpole_step(state, 0, physics, step_rng);
        state = out.next_state;
        done = out.done;
        ++steps;
    }
    CHECK(steps == ref_steps);
}

TEST_CASE("cartpole reset samples every coordinate inside [-0.05, 0.05]") {
    CartPoleEnv env;
    RandomStream rng(7);
    for (int i = 0; i < 1000; ++i) {
        const EnvState s = env.reset(rng);
        REQUIRE(s.features.size() == 4);
        CHECK_FALSE(s.done);
        for (int j = 0; j < 4; ++j) {
            CHECK(s.features[j] >= -0.05);
            CHECK(s.features[j] <= 0.05);
        }
    }
}

TEST_CASE("identical seeds give identical trajectories") {
    for (int trial = 0; trial < 2; ++trial) {
        CartPolePhysics physics;
        physics.action_flip_prob = 0.25;
        CartPoleEnv env_a(physics), env_b(physics);
        RandomStream rng_a(99), rng_b(99);
        EnvState sa = env_a.reset(rng_a);
        EnvState sb = env_b.reset(rng_b);
        CHECK(sa.features == sb.features);
        bool done = false;
        for (int t = 0; t < 200 && !done; ++t) {
            const StepOutcome oa = env_a.step(t % 2, rng_a);
            const StepOutcome ob = env_b.step(t % 2, rng_b);
            REQUIRE(oa.next_state.features == ob.next_state.features);
            done = oa.done;
        }
    }
}

TEST_CASE("stepping a terminal state is rejected") {
    RandomStream rng(1);
    CartPolePhysics physics;
    EnvState dead = make_state(0, 0, 0, 0);
    dead.done = true;
    CHECK_THROWS_AS(cartpole_step(dead, 0, physics, rng), std::logic_error);

    CartPoleEnv env;
    CHECK_THROWS_AS(env.step(0, rng), std::logic_error); // step before reset

    SessionEnv session;
    CHECK_THROWS_AS(session.step(0, rng), std::logic_error);
}

TEST_CASE("max_steps truncates the episode") {
    CartPolePhysics physics;
    physics.max_steps = 5;
    CartPoleEnv env(physics);
    RandomStream rng(5);
    env.reset(rng);
    int steps = 0;
    bool done = false;
    while (!done) {
        done = env.step(steps % 2, rng).done;
        ++steps;
        REQUIRE(steps <= 5);
    }
    CHECK(steps == 5);
}

TEST_CASE("physics parameters are validated") {
    CartPolePhysics bad;
    bad.force_mag = -1.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = {};
    bad.action_flip_prob = 1.5;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = {};
    bad.pole_length = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("session reset encodes no previous action and is seed-deterministic") {
    SessionEnv env;
    RandomStream rng_a(11), rng_b(11);
    SessionEnv env_b;
    const EnvState a = env.reset(rng_a);
    const EnvState b = env_b.reset(rng_b);
    CHECK(a.features == b.features);
    CHECK(a.features[4] == 0.0);
    CHECK(a.features[5] == 0.0);
    CHECK_FALSE(a.done);
    CHECK(env.time_bucket() == env_b.time_bucket());
}

TEST_CASE("session features are action-independent when carryover is off") {
    SessionEnvConfig cfg;
    cfg.carryover_strength = 0.0;
    cfg.drift_amplitude = 0.0;
    const int n = 10000;

    // Same pre-step state, different action: compare the next engagement level.
    double sum_low = 0.0, sum_high = 0.0, sq_low = 0.0, sq_high = 0.0;
    RandomStream rng(21);
    SessionEnv env(cfg);
    for (int i = 0; i < n; ++i) {
        EnvState s = env.reset(rng);
        const double l_low = session_step(s, kAdLoadLow, cfg, env.time_bucket(), rng)
                                 .next_state.features[2];
        const double l_high = session_step(s, kAdLoadHigh, cfg, env.time_bucket(), rng)
                                  .next_state.features[2];
        sum_low += l_low;
        sum_high += l_high;
        sq_low += l_low * l_low;
        sq_high += l_high * l_high;
    }
    const double mean_low = sum_low / n, mean_high = sum_high / n;
    const double var = (sq_low / n - mean_low * mean_low + sq_high / n - mean_high * mean_high);
    const double z = (mean_low - mean_high) / std::sqrt(var / n);
    CHECK(std::abs(z) < 3.0);
}

TEST_CASE("carryover depresses the next engagement level after high ad load") {
    SessionEnvConfig cfg;
    cfg.carryover_strength = 0.3;
    const int n = 10000;
    double sum_low = 0.0, sum_high = 0.0;
    RandomStream rng(22);
    SessionEnv env(cfg);
    for (int i = 0; i < n; ++i) {
        EnvState s = env.reset(rng);
        sum_low += session_step(s, kAdLoadLow, cfg, env.time_bucket(), rng).next_state.features[2];
        sum_high += session_step(s, kAdLoadHigh, cfg, env.time_bucket(), rng).next_state.features[2];
    }
    CHECK(sum_high / n < sum_low / n - 0.25); // gap is the carryover strength
}

TEST_CASE("high ad load raises expected revenue for every user type") {
    SessionEnvConfig cfg;
    SessionEnv env(cfg);
    const int n = 10000;
    RandomStream rng(23);
    std::vector<double> rev_low(cfg.n_user_types, 0.0), rev_high(cfg.n_user_types, 0.0);
    std::vector<int> counts(cfg.n_user_types, 0);
    for (int i = 0; i < n; ++i) {
        EnvState s = env.reset(rng);
        int type = -1;
        for (int u = 0; u < cfg.n_user_types; ++u)
            if (s.features[0] == env.type_base_engagement()[u]) type = u;
        REQUIRE(type >= 0);
        rev_low[type] += session_step(s, kAdLoadLow, cfg, env.time_bucket(), rng).reward_rev;
        rev_high[type] += session_step(s, kAdLoadHigh, cfg, env.time_bucket(), rng).reward_rev;
        counts[type] += 1;
    }
    for (int u = 0; u < cfg.n_user_types; ++u) {
        REQUIRE(counts[u] > 100);
        CHECK(rev_high[u] / counts[u] > rev_low[u] / counts[u]);
    }
}

TEST_CASE("engagement response shifts with the time bucket when drift is on") {
    SessionEnvConfig cfg;
    cfg.drift_amplitude = 0.5;
    EnvState s;
    s.features.resize(6);
    s.features << 0.5, 0.6, 0.5, 0.25, 0.0, 0.0;
    const double morning = session_true_delta_eng(s, cfg, 6);
    const double evening = session_true_delta_eng(s, cfg, 18);
    CHECK(morning != evening);
    CHECK(session_true_delta_eng(s, cfg, 6) < 0.0);
    CHECK(session_true_delta_rev(s, cfg, 6) > 0.0);

    SessionEnvConfig flat = cfg;
    flat.drift_amplitude = 0.0;
    CHECK(session_true_delta_eng(s, flat, 6) == session_true_delta_eng(s, flat, 18));
}

TEST_SUITE_END();
