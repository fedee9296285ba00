#include <doctest.h>

#include <cmath>

#include "adrl/robust_linear.hpp"

using namespace adrl;

TEST_SUITE_BEGIN("robust_linear");

TEST_CASE("oracle returns the nominal expectation at delta zero") {
    RandomStream rng(1);
    const LinearRmdp mdp = LinearRmdp::random(4, 2, 3, 0.8, 0.0, rng);
    const LinearValue v = LinearValue::random(mdp.Phi, mdp.gamma, rng);
    const Eigen::VectorXd row = mdp.P0.row(0);
    const OracleReport rep = ipm_inner_min_oracle(row, v, mdp.Phi, 0.0, rng);
    CHECK(rep.value == row.dot(v.values(mdp.Phi)));
    CHECK(rep.penalty_rate == 0.0);
}

TEST_CASE("oracle agrees with the closed-form regularization") {
    RandomStream rng(2);
    for (int i = 0; i < 8; ++i) {
        RandomStream inst = rng.split(static_cast<std::uint64_t>(i));
        const int S = 3 + i % 4;
        const int d = 2 + i % 3;
        const LinearRmdp mdp = LinearRmdp::random(S, 2, d, 0.8, 0.0, inst);
        const LinearValue v = LinearValue::random(mdp.Phi, mdp.gamma, inst);
        const Eigen::VectorXd row = mdp.P0.row(inst.uniform_int(0, S * 2 - 1));
        for (double delta : {1e-3, 1e-2, 1e-1}) {
            const OracleReport rep = ipm_inner_min_oracle(row, v, mdp.Phi, delta, inst);
            const double closed =
                row.dot(v.values(mdp.Phi)) - delta * v.w.tail(v.w.size() - 1).norm();
            CHECK(std::abs(rep.value - closed) < 1e-6);
        }
    }
}

TEST_CASE("constant value functions carry no robustness penalty") {
    RandomStream rng(3);
    const LinearRmdp mdp = LinearRmdp::random(5, 2, 3, 0.8, 0.0, rng);
    LinearValue v;
    v.w = Eigen::VectorXd::Zero(3);
    v.w[0] = 0.7;
    const Eigen::VectorXd row = mdp.P0.row(2);
    for (double delta : {0.0, 0.05, 0.5}) {
        const OracleReport rep = ipm_inner_min_oracle(row, v, mdp.Phi, delta, rng);
        CHECK(std::abs(rep.value - 0.7) < 1e-9);
    }
}

TEST_CASE("value class membership is enforced") {
    RandomStream rng(4);
    const LinearRmdp mdp = LinearRmdp::random(4, 2, 3, 0.8, 0.0, rng);
    LinearValue bad;
    bad.w = Eigen::VectorXd::Constant(3, 2.0); // norm > 1
    CHECK_THROWS_AS(bad.check_in_class(mdp.Phi, mdp.gamma), std::invalid_argument);
    for (int i = 0; i < 20; ++i)
        CHECK_NOTHROW(LinearValue::random(mdp.Phi, mdp.gamma, rng).check_in_class(mdp.Phi, 0.8));
}

TEST_CASE("bellman operator reduces to the standard backup at delta zero") {
    RandomStream rng(5);
    LinearRmdp mdp = LinearRmdp::random_tabular(4, 2, 0.9, 0.0, rng);
    Eigen::MatrixXd q = Eigen::MatrixXd::Random(4, 2).cwiseAbs();
    const BellmanResult result = robust_bellman_apply(q, mdp);
    CHECK(result.penalty == 0.0);
    CHECK(result.projection_residual < 1e-9);

    const Eigen::VectorXd v = q.rowwise().maxCoeff();
    for (int s = 0; s < 4; ++s)
        for (int a = 0; a < 2; ++a) {
            const double expected = mdp.rewards(s, a) + 0.9 * mdp.P0.row(mdp.row(s, a)).dot(v);
            CHECK(result.q(s, a) == doctest::Approx(expected).epsilon(1e-12));
        }
}

TEST_CASE("zero Q maps to the reward table") {
    RandomStream rng(6);
    LinearRmdp mdp = LinearRmdp::random_tabular(3, 2, 0.8, 0.01, rng);
    const BellmanResult result = robust_bellman_apply(Eigen::MatrixXd::Zero(3, 2), mdp);
    CHECK((result.q - mdp.rewards).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("two-state application matches hand arithmetic") {
    LinearRmdp mdp;
    mdp.n_states = 2;
    mdp.n_actions = 2;
    mdp.gamma = 0.5;
    mdp.delta = 0.1;
    mdp.P0.resize(4, 2);
    mdp.P0 << 0.75, 0.25, 0.5, 0.5, 0.25, 0.75, 1.0, 0.0;
    mdp.rewards.resize(2, 2);
    mdp.rewards << 0.2, 0.4, 0.6, 0.8;
    mdp.Phi = tabular_state_features(2);
    mdp.Psi = tabular_state_features(4);
    mdp.validate();

    Eigen::MatrixXd q(2, 2);
    q << 1.0, 2.0, 3.0, 2.5;
    // V = (2, 3); w = (2, 1); penalty = 0.1 * 1 = 0.1.
    // TQ(0,0) = 0.2 + 0.5*(0.75*2 + 0.25*3 - 0.1) = 0.2 + 0.5*2.15 = 1.275
    // TQ(0,1) = 0.4 + 0.5*(0.5*2 + 0.5*3 - 0.1)  = 0.4 + 0.5*2.4  = 1.6
    // TQ(1,0) = 0.6 + 0.5*(0.25*2 + 0.75*3 - 0.1) = 0.6 + 0.5*2.65 = 1.925
    // TQ(1,1) = 0.8 + 0.5*(2 - 0.1)               = 0.8 + 0.95    = 1.75
    const BellmanResult result = robust_bellman_apply(q, mdp);
    CHECK(result.penalty == doctest::Approx(0.1).epsilon(1e-14));
    CHECK(result.q(0, 0) == doctest::Approx(1.275).epsilon(1e-14));
    CHECK(result.q(0, 1) == doctest::Approx(1.6).epsilon(1e-14));
    CHECK(result.q(1, 0) == doctest::Approx(1.925).epsilon(1e-14));
    CHECK(result.q(1, 1) == doctest::Approx(1.75).epsilon(1e-14));
}

TEST_CASE("value iteration solves a two-state chain analytically") {
    // State 0 absorbs with reward 1; state 1 moves to 0 with reward 0.
    LinearRmdp mdp;
    mdp.n_states = 2;
    mdp.n_actions = 2;
    mdp.gamma = 0.9;
    mdp.delta = 0.0;
    mdp.P0.resize(4, 2);
    mdp.P0 << 1, 0, 1, 0, 1, 0, 1, 0;
    mdp.rewards.resize(2, 2);
    mdp.rewards << 1.0, 1.0, 0.0, 0.0;
    mdp.Phi = tabular_state_features(2);
    mdp.Psi = tabular_state_features(4);
    mdp.validate();

    const auto vi = robust_value_iteration(mdp, 1e-12);
    CHECK(vi.converged);
    CHECK(vi.q_star(0, 0) == doctest::Approx(1.0 / 0.1).epsilon(1e-8));
    CHECK(vi.q_star(1, 0) == doctest::Approx(0.9 / 0.1).epsilon(1e-8));
}

TEST_CASE("contraction ratios stay below one under the radius bound") {
    RandomStream rng(7);
    LinearRmdp mdp = LinearRmdp::random_tabular(4, 2, 0.75, 0.0, rng);
    const double bound = prop2_delta_bound(mdp);
    REQUIRE(bound > 0.0);
    mdp.delta = 0.9 * bound;

    double max_ratio = 0.0;
    const double span = 1.0 / (1.0 - mdp.gamma);
    for (int k = 0; k < 100; ++k) {
        Eigen::MatrixXd q1(4, 2), q2(4, 2);
        for (int i = 0; i < q1.size(); ++i) {
            q1.data()[i] = rng.uniform(0.0, span);
            q2.data()[i] = rng.uniform(0.0, span);
        }
        const double num =
            (robust_bellman_apply(q1, mdp).q - robust_bellman_apply(q2, mdp).q).norm();
        const double den = (q1 - q2).norm();
        if (den > 1e-12) max_ratio = std::max(max_ratio, num / den);
    }
    CHECK(max_ratio < 1.0);

    // Beyond the bound the precondition is rejected.
    LinearRmdp too_robust = mdp;
    too_robust.delta = 2.0 * bound;
    CHECK_THROWS_AS(robust_value_iteration(too_robust), std::invalid_argument);
}

TEST_CASE("operator is monotone while the penalty respects the kernel floor") {
    RandomStream rng(8);
    LinearRmdp mdp = LinearRmdp::random_tabular(4, 2, 0.8, 0.0, rng);
    double min_p = 1.0;
    for (int i = 0; i < mdp.P0.rows(); ++i) min_p = std::min(min_p, mdp.P0.row(i).minCoeff());
    // Keep the relaxed minimizer inside the simplex so the inf stays monotone.
    mdp.delta = std::min(0.5 * prop2_delta_bound(mdp), 0.2 * min_p / std::sqrt(4.0));

    for (int k = 0; k < 50; ++k) {
        Eigen::MatrixXd q1(4, 2), q2(4, 2);
        for (int i = 0; i < q1.size(); ++i) {
            q1.data()[i] = rng.uniform(0.0, 4.0);
            q2.data()[i] = q1.data()[i] + rng.uniform(0.0, 1.0);
        }
        const Eigen::MatrixXd t1 = robust_bellman_apply(q1, mdp).q;
        const Eigen::MatrixXd t2 = robust_bellman_apply(q2, mdp).q;
        CHECK((t2 - t1).minCoeff() >= -1e-12);
    }
}

TEST_CASE("larger radii never raise the fixed point") {
    RandomStream rng(9);
    LinearRmdp mdp = LinearRmdp::random_tabular(4, 2, 0.75, 0.0, rng);
    const double bound = prop2_delta_bound(mdp);
    LinearRmdp d1 = mdp, d2 = mdp;
    d1.delta = 0.3 * bound;
    d2.delta = 0.6 * bound;
    const Eigen::MatrixXd q0 = robust_value_iteration(mdp).q_star;
    const Eigen::MatrixXd q_mid = robust_value_iteration(d1).q_star;
    const Eigen::MatrixXd q_hi = robust_value_iteration(d2).q_star;
    CHECK((q0 - q_mid).minCoeff() >= -1e-9);
    CHECK((q_mid - q_hi).minCoeff() >= -1e-9);
}

TEST_CASE("fqi with tabular features reaches the empirical fixed point") {
    RandomStream rng(10);
    LinearRmdp mdp = LinearRmdp::random_tabular(3, 2, 0.75, 0.0, rng);
    const auto data = sample_rmdp_balanced(mdp, 12000, rng);
    const LinearRmdp emp = empirical_mdp(mdp, data);

    for (double delta : {0.0, 1e-2}) {
        LinearRmdp emp_d = emp;
        emp_d.delta = delta;
        const auto vi = robust_value_iteration(emp_d, 1e-12);
        const auto fqi = robust_fqi(data, mdp, delta, 60);
        CHECK((fqi.q_table - vi.q_star).cwiseAbs().maxCoeff() < 1e-3);
        CHECK_FALSE(fqi.used_ridge);
    }
}

TEST_CASE("fqi with zero iterations returns the zero function") {
    RandomStream rng(11);
    LinearRmdp mdp = LinearRmdp::random_tabular(3, 2, 0.75, 0.0, rng);
    const auto data = sample_rmdp_balanced(mdp, 600, rng);
    const auto fqi = robust_fqi(data, mdp, 0.0, 0);
    CHECK(fqi.q_table.cwiseAbs().maxCoeff() == 0.0);
    REQUIRE(fqi.policies.size() == 1);
    for (int s = 0; s < 3; ++s) CHECK(fqi.policies[0][s] == 0); // tie policy
}

TEST_CASE("rank-deficient regressors fall back to ridge") {
    RandomStream rng(12);
    LinearRmdp mdp = LinearRmdp::random_tabular(3, 2, 0.75, 0.0, rng);
    Eigen::MatrixXd psi(mdp.Psi.rows(), mdp.Psi.cols() + 1);
    psi << mdp.Psi, mdp.Psi.col(1); // duplicated column
    mdp.Psi = psi;
    const auto data = sample_rmdp_balanced(mdp, 600, rng);
    const auto fqi = robust_fqi(data, mdp, 0.0, 5);
    CHECK(fqi.used_ridge);
    CHECK(fqi.q_table.allFinite());
}

TEST_CASE("balanced sampling covers every state-action cell") {
    RandomStream rng(13);
    const LinearRmdp mdp = LinearRmdp::random_tabular(4, 2, 0.8, 0.0, rng);
    const auto data = sample_rmdp_balanced(mdp, 64, rng);
    Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(4, 2);
    for (const auto& d : data) counts(d.s, d.a) += 1.0;
    CHECK(counts.minCoeff() == 8.0);

    CHECK_THROWS_AS(empirical_mdp(mdp, {{0, 0, 1, 0.5}}), std::invalid_argument);
}

TEST_CASE("robust policy evaluation never exceeds the optimal robust value") {
    RandomStream rng(14);
    LinearRmdp mdp = LinearRmdp::random_tabular(4, 2, 0.8, 0.0, rng);
    mdp.delta = 0.3 * prop2_delta_bound(mdp);
    const auto vi = robust_value_iteration(mdp);
    const Eigen::VectorXd v_star = vi.q_star.rowwise().maxCoeff();
    for (int trial = 0; trial < 8; ++trial) {
        Eigen::VectorXi pi(4);
        for (int s = 0; s < 4; ++s) pi[s] = rng.uniform_int(0, 1);
        const Eigen::VectorXd v_pi = robust_policy_value(mdp, pi);
        CHECK((v_star - v_pi).minCoeff() >= -1e-8);
    }
}

TEST_CASE("suboptimality trend rejects an oversized radius") {
    RandomStream rng(15);
    LinearRmdp mdp = LinearRmdp::random_tabular(3, 2, 0.75, 0.0, rng);
    mdp.delta = 1.0 / (1.0 - mdp.gamma) + 1.0;
    CHECK_THROWS_AS(theorem1_trend(mdp, {100}, {1}, 2, rng), std::invalid_argument);
}

TEST_CASE("suboptimality trend smoke run produces finite cells") {
    RandomStream rng(16);
    LinearRmdp mdp = LinearRmdp::random_tabular(3, 2, 0.75, 5e-3, rng);
    const auto cells = theorem1_trend(mdp, {200, 400}, {1, 8}, 4, rng);
    REQUIRE(cells.size() == 4);
    for (const auto& c : cells) {
        CHECK(std::isfinite(c.mean_gap));
        CHECK(c.mean_gap >= -1e-8);
        CHECK(c.gaps.size() == 4);
    }
    // More iterations help on the same data.
    CHECK(cells[1].mean_gap <= cells[0].mean_gap + 2 * (cells[0].std_err + cells[1].std_err));
}

TEST_SUITE_END();
