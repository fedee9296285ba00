#include <algorithm>
#include <cmath>
#include <cstdio>
#include <vector>

#include "acceptance.hpp"
#include "adrl/agent.hpp"
#include "adrl/robust_linear.hpp"
#include "adrl/session_env.hpp"

using namespace adrl;

namespace acceptance {

// Closed-form robustness regularization vs. the numeric inner-minimization
// oracle, over randomized instances and the full radius ladder.
bool criterion_1_prop1_oracle() {
    RandomStream rng(20101);
    double max_residual = 0.0;
    const double deltas[] = {1e-3, 1e-2, 1e-1};
    const int n_instances = 20;
    for (int i = 0; i < n_instances; ++i) {
        RandomStream inst = rng.split(static_cast<std::uint64_t>(i));
        const int S = 3 + i % 4;               // 3..6 states
        const int d = std::min(2 + i % 3, S);  // 2..4 features, never above S
        const LinearRmdp mdp = LinearRmdp::random(S, 2, d, 0.8, 0.0, inst);
        const LinearValue value = LinearValue::random(mdp.Phi, mdp.gamma, inst);
        const Eigen::VectorXd row = mdp.P0.row(inst.uniform_int(0, S * 2 - 1));
        for (double delta : deltas) {
            const OracleReport rep = ipm_inner_min_oracle(row, value, mdp.Phi, delta, inst);
            const double closed =
                row.dot(value.values(mdp.Phi)) - delta * value.w.tail(value.w.size() - 1).norm();
            max_residual = std::max(max_residual, std::abs(rep.value - closed));
        }
    }
    char detail[160];
    std::snprintf(detail, sizeof(detail),
                  "max |oracle - closed form| = %.3e over %d instances x 3 radii (tol 1e-6)",
                  max_residual, n_instances);
    return report(1, "prop1_oracle_equivalence", max_residual < 1e-6, detail);
}

bool criterion_2_prop2_contraction() {
    RandomStream rng(20202);
    double max_ratio = 0.0;
    double used_delta = 0.0, used_bound = 0.0;
    for (int inst_id = 0; inst_id < 3; ++inst_id) {
        RandomStream inst = rng.split(static_cast<std::uint64_t>(inst_id));
        LinearRmdp mdp = LinearRmdp::random_tabular(4 + inst_id % 2, 2, 0.75, 0.0, inst);
        const double bound = prop2_delta_bound(mdp);
        mdp.delta = 0.9 * bound;
        used_delta = mdp.delta;
        used_bound = bound;
        const double span = 1.0 / (1.0 - mdp.gamma);
        for (int k = 0; k < 100; ++k) {
            Eigen::MatrixXd q1(mdp.n_states, mdp.n_actions), q2(mdp.n_states, mdp.n_actions);
            for (int j = 0; j < q1.size(); ++j) {
                q1.data()[j] = inst.uniform(0.0, span);
                q2.data()[j] = inst.uniform(0.0, span);
            }
            const double num =
                (robust_bellman_apply(q1, mdp).q - robust_bellman_apply(q2, mdp).q).norm();
            const double den = (q1 - q2).norm();
            if (den > 1e-12) max_ratio = std::max(max_ratio, num / den);
        }
    }
    char detail[160];
    std::snprintf(detail, sizeof(detail),
                  "max ||TQ1-TQ2||/||Q1-Q2|| = %.4f over 3 instances x 100 pairs "
                  "(delta 0.9*bound, last bound %.4g)",
                  max_ratio, used_bound);
    (void)used_delta;
    return report(2, "prop2_contraction", max_ratio < 1.0, detail);
}

bool criterion_3_fqi_fixed_point() {
    RandomStream rng(20303);
    double worst_gap = 0.0;
    for (int inst_id = 0; inst_id < 3; ++inst_id) {
        RandomStream inst = rng.split(static_cast<std::uint64_t>(inst_id));
        const int S = 3 + inst_id % 2;
        LinearRmdp mdp = LinearRmdp::random_tabular(S, 2, 0.75, 0.0, inst);
        const auto data = sample_rmdp_balanced(mdp, 40000, inst);
        const LinearRmdp emp = empirical_mdp(mdp, data);
        for (double delta : {0.0, 1e-2}) {
            LinearRmdp emp_d = emp;
            emp_d.delta = delta;
            const auto vi = robust_value_iteration(emp_d, 1e-12);
            const auto fqi = robust_fqi(data, mdp, delta, 60);
            worst_gap = std::max(worst_gap, (fqi.q_table - vi.q_star).cwiseAbs().maxCoeff());
        }
    }
    char detail[160];
    std::snprintf(detail, sizeof(detail),
                  "max sup-norm gap FQI vs value iteration = %.3e on 3 MDPs x {0, 1e-2} (tol 1e-3)",
                  worst_gap);
    return report(3, "fqi_fixed_point_equivalence", worst_gap < 1e-3, detail);
}

// Fixed four-state MDP whose myopic policy is suboptimal: at state 0 the
// immediate reward favors the trap-adjacent action while the optimal policy
// routes through the high-value state, so early FQI iterates carry a real gap.
static LinearRmdp trend_mdp() {
    LinearRmdp mdp;
    mdp.n_states = 4;
    mdp.n_actions = 2;
    mdp.gamma = 0.75;
    mdp.delta = 1e-2;
    mdp.P0.resize(8, 4);
    mdp.P0 << 0.10, 0.80, 0.05, 0.05,  // (0, a0): toward the trap
              0.10, 0.05, 0.80, 0.05,  // (0, a1): toward the good state
              0.15, 0.70, 0.05, 0.10,  // (1, a0)
              0.15, 0.70, 0.05, 0.10,  // (1, a1)
              0.05, 0.05, 0.70, 0.20,  // (2, a0)
              0.05, 0.05, 0.70, 0.20,  // (2, a1)
              0.60, 0.10, 0.10, 0.20,  // (3, a0)
              0.60, 0.10, 0.10, 0.20;  // (3, a1)
    mdp.rewards.resize(4, 2);
    mdp.rewards << 0.60, 0.05,
                   0.15, 0.15,
                   0.85, 0.85,
                   0.50, 0.50;
    mdp.Phi = tabular_state_features(4);
    mdp.Psi = tabular_state_features(8);
    mdp.validate();
    return mdp;
}

bool criterion_4_theorem1_trend() {
    RandomStream rng(20404);
    LinearRmdp mdp = trend_mdp();
    // Small corpora (15 and 30 draws per state-action cell) keep genuine
    // sampling error in play so the dataset-size term is visible.
    const std::vector<std::size_t> n_list = {120, 240};
    const std::vector<int> t_list = {1, 2, 3, 4, 6, 10, 16};
    const int n_seeds = 24;
    const auto cells = theorem1_trend(mdp, n_list, t_list, n_seeds, rng);

    auto cell_at = [&](std::size_t ni, std::size_t ti) -> const TrendCell& {
        return cells[ni * t_list.size() + ti];
    };
    auto paired_diff = [&](const TrendCell& hi, const TrendCell& lo, double& mean, double& se) {
        // hi - lo over matched seeds
        double sum = 0.0;
        for (int s = 0; s < n_seeds; ++s) sum += hi.gaps[s] - lo.gaps[s];
        mean = sum / n_seeds;
        double sq = 0.0;
        for (int s = 0; s < n_seeds; ++s) {
            const double d = hi.gaps[s] - lo.gaps[s] - mean;
            sq += d * d;
        }
        se = std::sqrt(sq / (n_seeds - 1)) / std::sqrt(static_cast<double>(n_seeds));
    };

    bool pass = true;
    for (std::size_t ni = 0; ni < n_list.size(); ++ni) {
        for (std::size_t ti = 1; ti < t_list.size(); ++ti) {
            double mean = 0.0, se = 0.0;
            paired_diff(cell_at(ni, ti), cell_at(ni, ti - 1), mean, se);
            if (mean > 2.0 * se) pass = false;
        }
    }
    double worst_n_margin = -1e9;
    for (std::size_t ti = 0; ti < t_list.size(); ++ti) {
        double mean = 0.0, se = 0.0;
        paired_diff(cell_at(1, ti), cell_at(0, ti), mean, se); // larger N minus smaller N
        worst_n_margin = std::max(worst_n_margin, mean - 2.0 * se);
        if (mean > 2.0 * se) pass = false;
    }

    char detail[220];
    std::snprintf(detail, sizeof(detail),
                  "mean gap T=1..%d at N=%zu: %.4f -> %.4f; at N=%zu: %.4f -> %.4f "
                  "(%d seeds; worst N-doubling margin %.4g, must be <= 0)",
                  t_list.back(), n_list[0], cell_at(0, 0).mean_gap,
                  cell_at(0, t_list.size() - 1).mean_gap, n_list[1], cell_at(1, 0).mean_gap,
                  cell_at(1, t_list.size() - 1).mean_gap, n_seeds, worst_n_margin);
    return report(4, "theorem1_suboptimality_trend", pass, detail);
}

bool criterion_5_gradient_fidelity() {
    RandomStream rng(20505);
    double max_rel_err = 0.0;
    int probes_done = 0;
    const double h = 1e-5;
    for (int net_id = 0; net_id < 5; ++net_id) {
        QNet net = QNet::make(4, {8, 6}, 2, HeadKind::Dueling, rng);
        const int batch = 8;
        Eigen::MatrixXd states(batch, 4);
        for (int i = 0; i < states.size(); ++i) states.data()[i] = rng.normal();
        Eigen::VectorXi actions(batch);
        Eigen::VectorXd targets(batch);
        for (int i = 0; i < batch; ++i) {
            actions[i] = rng.uniform_int(0, 1);
            targets[i] = rng.normal();
        }

        // Squared TD-style objective: mean_i (q(s_i, a_i) - y_i)^2.
        auto loss = [&]() {
            const Eigen::MatrixXd q = net.q_values(states);
            double total = 0.0;
            for (int i = 0; i < batch; ++i) {
                const double r = q(i, actions[i]) - targets[i];
                total += r * r;
            }
            return total / batch;
        };

        const ForwardPass fp = net.forward(states);
        Eigen::MatrixXd dq = Eigen::MatrixXd::Zero(batch, 2);
        for (int i = 0; i < batch; ++i)
            dq(i, actions[i]) = 2.0 * (fp.q(i, actions[i]) - targets[i]) / batch;
        const Gradients g = net.backward(fp, dq);

        std::vector<double> flat;
        auto push_layer = [&](const DenseLayer& l) {
            for (int i = 0; i < l.W.rows(); ++i)
                for (int j = 0; j < l.W.cols(); ++j) flat.push_back(l.W(i, j));
            for (int i = 0; i < l.b.size(); ++i) flat.push_back(l.b[i]);
        };
        for (const auto& l : g.trunk) push_layer(l);
        push_layer(g.value);
        push_layer(g.advantage);

        auto params = net.parameter_ptrs();
        const std::size_t stride = std::max<std::size_t>(1, params.size() / 10);
        for (std::size_t k = 0; k < params.size() && probes_done < 50; k += stride) {
            const double saved = *params[k];
            *params[k] = saved + h;
            const double up = loss();
            *params[k] = saved - h;
            const double down = loss();
            *params[k] = saved;
            const double fd = (up - down) / (2.0 * h);
            const double denom = std::max({std::abs(fd), std::abs(flat[k]), 1e-10});
            max_rel_err = std::max(max_rel_err, std::abs(fd - flat[k]) / denom);
            ++probes_done;
        }
    }
    char detail[160];
    std::snprintf(detail, sizeof(detail),
                  "max relative error %.3e over %d probes (h = 1e-5, tol 1e-4)", max_rel_err,
                  probes_done);
    return report(5, "gradient_fidelity", probes_done >= 50 && max_rel_err < 1e-4, detail);
}

bool criterion_6_delta_zero_reduction() {
    SessionEnv env;
    BehaviorPolicy uniform;
    RandomStream rng(20606);
    const OfflineDataset ds = collect(env, uniform, 5000, rng);

    AgentConfig cfg;
    cfg.gamma = 0.8;
    cfg.delta = 0.0;
    cfg.train_steps = 1000;
    cfg.initial_lr = 1e-3;
    cfg.seed = 606;
    const TrainedAgent dueling = train_offline(ds, cfg, Variant::Dueling);
    const TrainedAgent robust = train_offline(ds, cfg, Variant::RobustDueling);
    const double diff = robust.net.max_param_difference(dueling.net);

    char detail[160];
    std::snprintf(detail, sizeof(detail),
                  "max parameter difference %.3e after 1000 steps (tol 1e-10)", diff);
    return report(6, "delta_zero_reduction", diff <= 1e-10, detail);
}

} // namespace acceptance
