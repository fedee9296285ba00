#include "adrl/robust_linear.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

namespace adrl {

void LinearRmdp::validate() const {
    if (n_states < 2 || n_actions < 1)
        throw std::invalid_argument("rmdp: need at least 2 states and 1 action");
    if (gamma < 0.0 || gamma >= 1.0) throw std::invalid_argument("rmdp: gamma must be in [0,1)");
    if (delta < 0.0) throw std::invalid_argument("rmdp: delta must be >= 0");
    if (P0.rows() != n_states * n_actions || P0.cols() != n_states)
        throw std::invalid_argument("rmdp: P0 shape mismatch");
    for (int i = 0; i < P0.rows(); ++i) {
        if (P0.row(i).minCoeff() < 0.0 || std::abs(P0.row(i).sum() - 1.0) > 1e-9)
            throw std::invalid_argument("rmdp: P0 rows must be probability vectors");
    }
    if (rewards.rows() != n_states || rewards.cols() != n_actions)
        throw std::invalid_argument("rmdp: rewards shape mismatch");
    if (rewards.minCoeff() < 0.0 || rewards.maxCoeff() > 1.0)
        throw std::invalid_argument("rmdp: rewards must be in [0,1]");
    if (Phi.rows() != n_states || Phi.cols() < 1)
        throw std::invalid_argument("rmdp: Phi shape mismatch");
    if ((Phi.col(0).array() != 1.0).any())
        throw std::invalid_argument("rmdp: first Phi column must be all ones");
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Phi);
    if (qr.rank() < Phi.cols())
        throw std::invalid_argument("rmdp: Phi must have full column rank");
}

namespace {

Eigen::MatrixXd random_kernel(int n_rows, int n_states, RandomStream& rng) {
    Eigen::MatrixXd P(n_rows, n_states);
    for (int i = 0; i < n_rows; ++i) {
        double sum = 0.0;
        for (int j = 0; j < n_states; ++j) {
            // Exponential draws with a floor keep every entry strictly positive.
            P(i, j) = 0.05 - std::log(1.0 - rng.uniform());
            sum += P(i, j);
        }
        P.row(i) /= sum;
    }
    return P;
}

Eigen::MatrixXd random_features(int n_rows, int dim, RandomStream& rng) {
    Eigen::MatrixXd F(n_rows, dim);
    F.col(0).setOnes();
    for (int i = 0; i < n_rows; ++i)
        for (int j = 1; j < dim; ++j) F(i, j) = rng.uniform(-0.5, 0.5);
    return F;
}

} // namespace

Eigen::MatrixXd tabular_state_features(int n_states) {
    // [1 | e2 .. eS]: square with unit determinant, first column ones.
    Eigen::MatrixXd Phi = Eigen::MatrixXd::Zero(n_states, n_states);
    Phi.col(0).setOnes();
    for (int s = 1; s < n_states; ++s) Phi(s, s) = 1.0;
    return Phi;
}

LinearRmdp LinearRmdp::random(int n_states, int n_actions, int feature_dim, double gamma,
                              double delta, RandomStream& rng) {
    LinearRmdp mdp;
    mdp.n_states = n_states;
    mdp.n_actions = n_actions;
    mdp.gamma = gamma;
    mdp.delta = delta;
    mdp.P0 = random_kernel(n_states * n_actions, n_states, rng);
    mdp.rewards.resize(n_states, n_actions);
    for (int s = 0; s < n_states; ++s)
        for (int a = 0; a < n_actions; ++a) mdp.rewards(s, a) = rng.uniform();
    mdp.Phi = random_features(n_states, feature_dim, rng);
    mdp.Psi = random_features(n_states * n_actions, feature_dim, rng);
    mdp.validate();
    return mdp;
}

LinearRmdp LinearRmdp::random_tabular(int n_states, int n_actions, double gamma, double delta,
                                      RandomStream& rng) {
    LinearRmdp mdp = random(n_states, n_actions, 2, gamma, delta, rng);
    mdp.Phi = tabular_state_features(n_states);
    mdp.Psi = tabular_state_features(n_states * n_actions);
    mdp.validate();
    return mdp;
}

void LinearValue::check_in_class(const Eigen::MatrixXd& Phi, double gamma) const {
    if (w.norm() > 1.0 + 1e-12)
        throw std::invalid_argument("linear value: ||w|| must be <= 1");
    const Eigen::VectorXd v = Phi * w;
    if (v.minCoeff() < -1e-12 || v.maxCoeff() > 1.0 / (1.0 - gamma) + 1e-12)
        throw std::invalid_argument("linear value: values must lie in [0, 1/(1-gamma)]");
}

LinearValue LinearValue::random(const Eigen::MatrixXd& Phi, double gamma, RandomStream& rng) {
    const int d = static_cast<int>(Phi.cols());
    LinearValue lv;
    lv.w.resize(d);
    // Bias 0.5 with a modest non-bias direction keeps Phi*w within the class
    // range for feature entries in [-0.5, 0.5].
    Eigen::VectorXd dir(d - 1);
    for (int i = 0; i < d - 1; ++i) dir[i] = rng.normal();
    if (dir.norm() < 1e-12) dir.setOnes();
    dir.normalize();
    const double scale = rng.uniform(0.1, 0.45);
    lv.w[0] = 0.5;
    lv.w.tail(d - 1) = scale * dir;
    lv.check_in_class(Phi, gamma);
    return lv;
}

namespace {

// sup over the unit ball of z' u, by projected gradient ascent. The large
// step makes the iteration contract onto the maximizer geometrically.
double ball_sup(const Eigen::VectorXd& z, Eigen::VectorXd u0) {
    if (z.norm() < 1e-300) return 0.0;
    Eigen::VectorXd u = u0;
    if (u.norm() > 1e-12) u.normalize();
    const double step = 1e6;
    for (int k = 0; k < 6; ++k) {
        u += step * z;
        const double n = u.norm();
        if (n > 1.0) u /= n;
    }
    return z.dot(u);
}

// Basis of the sum-zero subspace of R^S.
Eigen::MatrixXd sum_zero_basis(int n_states) {
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n_states, n_states - 1);
    for (int k = 0; k < n_states - 1; ++k) {
        B(k, k) = 1.0;
        B(n_states - 1, k) = -1.0;
    }
    return B;
}

} // namespace

OracleReport ipm_inner_min_oracle(const Eigen::VectorXd& p0_row, const LinearValue& value,
                                  const Eigen::MatrixXd& Phi, double delta, RandomStream& rng,
                                  int restarts, int max_iters) {
    if (delta < 0.0) throw std::invalid_argument("ipm oracle: delta must be >= 0");
    if (p0_row.size() != Phi.rows()) throw std::invalid_argument("ipm oracle: shape mismatch");

    const Eigen::VectorXd v = value.values(Phi);
    const double nominal = p0_row.dot(v);
    OracleReport report;
    report.value = nominal;
    if (delta == 0.0) return report;

    const int S = static_cast<int>(Phi.rows());
    const Eigen::MatrixXd B = sum_zero_basis(S);
    const Eigen::MatrixXd M = Phi.transpose() * B; // d x (S-1)
    const Eigen::VectorXd c = B.transpose() * v;   // objective direction

    // Maximize rho(y) = (-c' y) / h(y), h(y) = sup_{||u||<=1} (M y)' u, over
    // directions y of the sum-zero subspace. rho is 0-homogeneous, so the
    // iterate is kept on the unit sphere.
    const int dim = S - 1;
    auto h_and_u = [&](const Eigen::VectorXd& y, Eigen::VectorXd& u_star) {
        const Eigen::VectorXd z = M * y;
        Eigen::VectorXd u0(z.size());
        for (int i = 0; i < u0.size(); ++i) u0[i] = rng.normal();
        const double h = ball_sup(z, u0);
        u_star = (z.norm() > 1e-300) ? Eigen::VectorXd(z / z.norm()) : Eigen::VectorXd::Zero(z.size());
        return h;
    };

    double best = 0.0;
    for (int r = 0; r < restarts; ++r) {
        Eigen::VectorXd y(dim);
        for (int i = 0; i < dim; ++i) y[i] = rng.normal();
        if (y.norm() < 1e-12) y.setOnes();
        y.normalize();

        Eigen::VectorXd u_star;
        double h = h_and_u(y, u_star);
        double rho = (h > 1e-12) ? (-c.dot(y)) / h : 0.0;
        double step = 0.5;

        for (int it = 0; it < max_iters; ++it) {
            if (h <= 1e-12) { // null direction of M; restart from a fresh point
                for (int i = 0; i < dim; ++i) y[i] = rng.normal();
                y.normalize();
                h = h_and_u(y, u_star);
                rho = (h > 1e-12) ? (-c.dot(y)) / h : 0.0;
                continue;
            }
            Eigen::VectorXd grad = (-c - rho * (M.transpose() * u_star)) / h;
            grad -= grad.dot(y) * y; // tangent component
            if (grad.norm() < 1e-14) break;

            bool improved = false;
            for (int ls = 0; ls < 40; ++ls) {
                Eigen::VectorXd y_new = (y + step * grad).normalized();
                Eigen::VectorXd u_new;
                const double h_new = h_and_u(y_new, u_new);
                const double rho_new = (h_new > 1e-12) ? (-c.dot(y_new)) / h_new : 0.0;
                if (rho_new > rho + 1e-16) {
                    y = y_new;
                    h = h_new;
                    u_star = u_new;
                    rho = rho_new;
                    step *= 1.5;
                    improved = true;
                    break;
                }
                step *= 0.5;
            }
            if (!improved) break;
        }
        report.restart_values.push_back(rho);
        best = std::max(best, rho);
    }

    report.penalty_rate = std::max(0.0, best);
    report.value = nominal - delta * report.penalty_rate;
    double worst = best;
    for (double rv : report.restart_values) worst = std::min(worst, rv);
    report.restart_spread = best - worst;
    return report;
}

namespace {

struct PhiSolver {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr;
    explicit PhiSolver(const Eigen::MatrixXd& Phi) : qr(Phi) {}
    Eigen::VectorXd solve(const Eigen::VectorXd& v) const { return qr.solve(v); }
};

Eigen::MatrixXd bellman_apply_impl(const Eigen::MatrixXd& q, const LinearRmdp& mdp,
                                   const PhiSolver& solver, double* residual_out,
                                   double* penalty_out) {
    const Eigen::VectorXd v = q.rowwise().maxCoeff();
    const Eigen::VectorXd w = solver.solve(v);
    const double residual = (mdp.Phi * w - v).cwiseAbs().maxCoeff();
    const double penalty = mdp.delta * w.tail(w.size() - 1).norm();

    Eigen::MatrixXd out(mdp.n_states, mdp.n_actions);
    for (int s = 0; s < mdp.n_states; ++s)
        for (int a = 0; a < mdp.n_actions; ++a)
            out(s, a) = mdp.rewards(s, a) +
                        mdp.gamma * (mdp.P0.row(mdp.row(s, a)).dot(v) - penalty);
    if (residual_out) *residual_out = residual;
    if (penalty_out) *penalty_out = penalty;
    return out;
}

} // namespace

BellmanResult robust_bellman_apply(const Eigen::MatrixXd& q, const LinearRmdp& mdp) {
    if (q.rows() != mdp.n_states || q.cols() != mdp.n_actions)
        throw std::invalid_argument("bellman: Q shape mismatch");
    BellmanResult result;
    PhiSolver solver(mdp.Phi);
    result.q = bellman_apply_impl(q, mdp, solver, &result.projection_residual, &result.penalty);
    return result;
}

double prop2_delta_bound(const LinearRmdp& mdp) {
    const Eigen::MatrixXd G = mdp.Phi.transpose() * mdp.Phi / static_cast<double>(mdp.n_states);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
    const double lambda_min = es.eigenvalues().minCoeff();
    return lambda_min * (1.0 - mdp.gamma) / mdp.gamma;
}

ValueIterationResult robust_value_iteration(const LinearRmdp& mdp, double tol, int max_iters) {
    mdp.validate();
    if (mdp.delta > 0.0) {
        const double bound = prop2_delta_bound(mdp);
        if (mdp.delta >= bound)
            throw std::invalid_argument("value iteration: delta " + std::to_string(mdp.delta) +
                                        " violates the contraction bound " + std::to_string(bound));
    }

    ValueIterationResult result;
    PhiSolver solver(mdp.Phi);
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(mdp.n_states, mdp.n_actions);
    double prev_diff = -1.0;
    int non_contracting = 0;

    for (int it = 0; it < max_iters; ++it) {
        Eigen::MatrixXd next = bellman_apply_impl(q, mdp, solver, nullptr, nullptr);
        const double diff = (next - q).cwiseAbs().maxCoeff();
        if (prev_diff > tol) {
            const double ratio = diff / prev_diff;
            result.contraction_ratios.push_back(ratio);
            non_contracting = (ratio >= 1.0) ? non_contracting + 1 : 0;
            if (non_contracting >= 25)
                throw std::runtime_error("value iteration: no contraction after " +
                                         std::to_string(it) + " iterations (last ratio " +
                                         std::to_string(ratio) + ")");
        }
        q = std::move(next);
        result.iterations = it + 1;
        if (diff < tol) {
            result.converged = true;
            break;
        }
        prev_diff = diff;
    }
    if (!result.converged)
        throw std::runtime_error("value iteration: did not converge within iteration budget");
    result.q_star = std::move(q);
    return result;
}

std::vector<RmdpSample> sample_rmdp_balanced(const LinearRmdp& mdp, std::size_t n_samples,
                                             RandomStream& rng) {
    std::vector<RmdpSample> data(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i) {
        const int cell = static_cast<int>(i % static_cast<std::size_t>(mdp.n_states * mdp.n_actions));
        const int s = cell / mdp.n_actions;
        const int a = cell % mdp.n_actions;
        const Eigen::VectorXd row = mdp.P0.row(mdp.row(s, a));
        double u = rng.uniform();
        int s_next = mdp.n_states - 1;
        for (int j = 0; j < mdp.n_states; ++j) {
            u -= row[j];
            if (u <= 0.0) {
                s_next = j;
                break;
            }
        }
        data[i] = {s, a, s_next, mdp.rewards(s, a)};
    }
    return data;
}

LinearRmdp empirical_mdp(const LinearRmdp& base, const std::vector<RmdpSample>& data) {
    LinearRmdp mdp = base;
    Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(base.n_states * base.n_actions, base.n_states);
    for (const auto& d : data) counts(base.row(d.s, d.a), d.s_next) += 1.0;
    for (int i = 0; i < counts.rows(); ++i) {
        const double total = counts.row(i).sum();
        if (total == 0.0)
            throw std::invalid_argument("empirical_mdp: dataset does not cover every (s,a)");
        mdp.P0.row(i) = counts.row(i) / total;
    }
    return mdp;
}

FqiResult robust_fqi(const std::vector<RmdpSample>& data, const LinearRmdp& mdp, double delta,
                     int iterations) {
    if (delta < 0.0) throw std::invalid_argument("fqi: delta must be >= 0");
    if (iterations < 0) throw std::invalid_argument("fqi: iterations must be >= 0");
    if (data.empty()) throw std::invalid_argument("fqi: empty dataset");

    const int d_psi = static_cast<int>(mdp.Psi.cols());
    const long n = static_cast<long>(data.size());

    Eigen::MatrixXd A(n, d_psi);
    for (long i = 0; i < n; ++i)
        A.row(i) = mdp.Psi.row(mdp.row(data[static_cast<std::size_t>(i)].s,
                                       data[static_cast<std::size_t>(i)].a));

    FqiResult result;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
    const bool singular = qr.rank() < d_psi;
    result.used_ridge = singular;
    Eigen::LDLT<Eigen::MatrixXd> ridge;
    if (singular) {
        // Rank-deficient design: fall back to a lightly ridged normal equation.
        ridge.compute(A.transpose() * A +
                      1e-8 * Eigen::MatrixXd::Identity(d_psi, d_psi));
    }

    PhiSolver phi_solver(mdp.Phi);
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(d_psi);
    auto q_table_of = [&](const Eigen::VectorXd& th) {
        Eigen::MatrixXd q(mdp.n_states, mdp.n_actions);
        const Eigen::VectorXd flat = mdp.Psi * th;
        for (int s = 0; s < mdp.n_states; ++s)
            for (int a = 0; a < mdp.n_actions; ++a) q(s, a) = flat[mdp.row(s, a)];
        return q;
    };
    auto greedy_of = [&](const Eigen::MatrixXd& q) {
        Eigen::VectorXi pi(mdp.n_states);
        for (int s = 0; s < mdp.n_states; ++s) {
            int best = 0;
            for (int a = 1; a < mdp.n_actions; ++a)
                if (q(s, a) > q(s, best)) best = a;
            pi[s] = best;
        }
        return pi;
    };

    for (int t = 0; t < iterations; ++t) {
        const Eigen::MatrixXd q_prev = q_table_of(theta);
        const Eigen::VectorXd v_prev = q_prev.rowwise().maxCoeff();
        const Eigen::VectorXd w_prev = phi_solver.solve(v_prev);
        const double penalty = mdp.gamma * delta * w_prev.tail(w_prev.size() - 1).norm();

        Eigen::VectorXd y(n);
        for (long i = 0; i < n; ++i) {
            const auto& smp = data[static_cast<std::size_t>(i)];
            y[i] = smp.r + mdp.gamma * v_prev[smp.s_next] - penalty;
        }
        theta = singular ? ridge.solve(A.transpose() * y).eval() : qr.solve(y).eval();
        result.policies.push_back(greedy_of(q_table_of(theta)));
    }
    result.theta = theta;
    result.q_table = q_table_of(theta);
    if (result.policies.empty()) result.policies.push_back(greedy_of(result.q_table));
    return result;
}

Eigen::VectorXd robust_policy_value(const LinearRmdp& mdp, const Eigen::VectorXi& policy,
                                    double tol, int max_iters) {
    if (policy.size() != mdp.n_states)
        throw std::invalid_argument("policy value: policy size mismatch");
    PhiSolver solver(mdp.Phi);
    Eigen::VectorXd v = Eigen::VectorXd::Zero(mdp.n_states);
    for (int it = 0; it < max_iters; ++it) {
        const Eigen::VectorXd w = solver.solve(v);
        const double penalty = mdp.delta * w.tail(w.size() - 1).norm();
        Eigen::VectorXd next(mdp.n_states);
        for (int s = 0; s < mdp.n_states; ++s) {
            const int a = policy[s];
            next[s] = mdp.rewards(s, a) + mdp.gamma * (mdp.P0.row(mdp.row(s, a)).dot(v) - penalty);
        }
        const double diff = (next - v).cwiseAbs().maxCoeff();
        v = std::move(next);
        if (diff < tol) return v;
    }
    throw std::runtime_error("policy value: did not converge");
}

std::vector<TrendCell> theorem1_trend(const LinearRmdp& mdp, const std::vector<std::size_t>& n_list,
                                      const std::vector<int>& t_list, int n_seeds,
                                      RandomStream& rng) {
    if (mdp.delta > 1.0 / (1.0 - mdp.gamma))
        throw std::invalid_argument("theorem1_trend: delta must be <= 1/(1-gamma)");

    const auto vi = robust_value_iteration(mdp);
    const Eigen::VectorXd v_star = vi.q_star.rowwise().maxCoeff();
    const double v_star_mean = v_star.mean();

    std::vector<TrendCell> cells;
    for (std::size_t n : n_list) {
        for (int t : t_list) {
            TrendCell cell;
            cell.n_samples = n;
            cell.iterations = t;
            cells.push_back(cell);
        }
    }

    for (int seed = 0; seed < n_seeds; ++seed) {
        for (std::size_t ni = 0; ni < n_list.size(); ++ni) {
            RandomStream data_rng = rng.split(1000 * static_cast<std::uint64_t>(seed) + ni);
            const auto data = sample_rmdp_balanced(mdp, n_list[ni], data_rng);
            for (std::size_t ti = 0; ti < t_list.size(); ++ti) {
                const auto fqi = robust_fqi(data, mdp, mdp.delta, t_list[ti]);
                const Eigen::VectorXd v_pi = robust_policy_value(mdp, fqi.policies.back());
                cells[ni * t_list.size() + ti].gaps.push_back(v_star_mean - v_pi.mean());
            }
        }
    }

    for (auto& cell : cells) {
        double sum = 0.0;
        for (double g : cell.gaps) sum += g;
        cell.mean_gap = sum / static_cast<double>(cell.gaps.size());
        double sq = 0.0;
        for (double g : cell.gaps) sq += (g - cell.mean_gap) * (g - cell.mean_gap);
        const auto k = static_cast<double>(cell.gaps.size());
        cell.std_err = k > 1 ? std::sqrt(sq / (k - 1)) / std::sqrt(k) : 0.0;
    }
    return cells;
}

} // namespace adrl
