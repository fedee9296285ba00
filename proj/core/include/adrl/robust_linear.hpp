#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "adrl/rng.hpp"

namespace adrl {

// Small explicit MDP with linear value features, used for exact verification
// of the robust-Bellman machinery. P0 rows (indexed s * n_actions + a) are the
// nominal next-state distributions; Phi carries state features whose first
// column is all ones (the bias coordinate); Psi carries state-action features.
struct LinearRmdp {
    int n_states = 0;
    int n_actions = 0;
    Eigen::MatrixXd P0;      // (S*A) x S
    Eigen::MatrixXd rewards; // S x A, values in [0,1]
    double gamma = 0.9;
    Eigen::MatrixXd Phi; // S x d, first column ones, full column rank
    Eigen::MatrixXd Psi; // (S*A) x d_psi
    double delta = 0.0;

    int row(int s, int a) const { return s * n_actions + a; }
    void validate() const;

    // Random instance with dense transition kernels (every entry positive)
    // and random features.
    static LinearRmdp random(int n_states, int n_actions, int feature_dim, double gamma,
                             double delta, RandomStream& rng);

    // Same dynamics generator with exact tabular features: Phi = [1, e2..eS]
    // (square, full rank, zero projection residual for any value table) and
    // the analogous Psi over state-action pairs.
    static LinearRmdp random_tabular(int n_states, int n_actions, double gamma, double delta,
                                     RandomStream& rng);
};

Eigen::MatrixXd tabular_state_features(int n_states);

// Value function in the linear class: V = Phi * w with ||w|| <= 1 and values
// inside [0, 1/(1-gamma)].
struct LinearValue {
    Eigen::VectorXd w;

    Eigen::VectorXd values(const Eigen::MatrixXd& Phi) const { return Phi * w; }
    void check_in_class(const Eigen::MatrixXd& Phi, double gamma) const;

    // Draws a class member with a strictly positive non-bias norm.
    static LinearValue random(const Eigen::MatrixXd& Phi, double gamma, RandomStream& rng);
};

struct OracleReport {
    double value = 0.0;        // inf_q q' V over the uncertainty set
    double penalty_rate = 0.0; // optimal objective decrease per unit delta
    double restart_spread = 0.0;
    std::vector<double> restart_values;
};

// Numerically minimizes q' V over {q : sum q = 1, sup_{||u||<=1} (q - P0)' Phi u <= delta}.
// The linear objective attains its minimum on the constraint boundary, and the
// constraint is positively homogeneous in q - P0, so the search reduces to a
// direction search over the sum-zero subspace; that ratio is maximized by
// projected gradient ascent with random restarts. Exists to validate the
// closed-form regularization independently; never uses it.
OracleReport ipm_inner_min_oracle(const Eigen::VectorXd& p0_row, const LinearValue& value,
                                  const Eigen::MatrixXd& Phi, double delta, RandomStream& rng,
                                  int restarts = 10, int max_iters = 600);

struct BellmanResult {
    Eigen::MatrixXd q;                 // S x A
    double projection_residual = 0.0;  // ||Phi w - max_a Q||_inf
    double penalty = 0.0;              // delta * ||w_{2:d}||
};

// (T Q)(s,a) = r(s,a) + gamma * (P0' V - delta * ||w_{2:d}||), V = max_a Q,
// w = least-squares projection of V onto the Phi columns.
BellmanResult robust_bellman_apply(const Eigen::MatrixXd& q, const LinearRmdp& mdp);

// Largest delta for which the contraction guarantee holds under uniform
// state-action weights (state marginal uniform over S).
double prop2_delta_bound(const LinearRmdp& mdp);

struct ValueIterationResult {
    Eigen::MatrixXd q_star;
    std::vector<double> contraction_ratios; // successive sup-norm difference ratios
    int iterations = 0;
    bool converged = false;
};

// Iterates the robust Bellman operator to its fixed point. Throws if delta
// violates the contraction precondition or if the iteration stops contracting.
ValueIterationResult robust_value_iteration(const LinearRmdp& mdp, double tol = 1e-10,
                                            int max_iters = 100000);

struct RmdpSample {
    int s = 0;
    int a = 0;
    int s_next = 0;
    double r = 0.0;
};

// Balanced full-support sampling: cycles deterministically through all (s,a)
// pairs, drawing s' from the nominal kernel.
std::vector<RmdpSample> sample_rmdp_balanced(const LinearRmdp& mdp, std::size_t n_samples,
                                             RandomStream& rng);

// Nominal kernel replaced by the empirical next-state frequencies of the data;
// every (s,a) cell must be covered.
LinearRmdp empirical_mdp(const LinearRmdp& base, const std::vector<RmdpSample>& data);

struct FqiResult {
    Eigen::VectorXd theta;                  // parameters of f_T in Psi coordinates
    Eigen::MatrixXd q_table;                // S x A values of f_T
    std::vector<Eigen::VectorXi> policies;  // greedy policy after each iterate
    bool used_ridge = false;
};

// Iterated least-squares regression of the robust TD targets onto Psi.
// f_0 = 0; each iterate regresses r_i + gamma * max_a f_{t-1}(s'_i, a)
// - gamma * delta * ||w_{t-1,2:d}|| onto psi(s_i, a_i).
FqiResult robust_fqi(const std::vector<RmdpSample>& data, const LinearRmdp& mdp, double delta,
                     int iterations);

// Exact robust value of a fixed deterministic policy (closed-form inner inf).
Eigen::VectorXd robust_policy_value(const LinearRmdp& mdp, const Eigen::VectorXi& policy,
                                    double tol = 1e-12, int max_iters = 200000);

struct TrendCell {
    std::size_t n_samples = 0;
    int iterations = 0;
    double mean_gap = 0.0; // mean over seeds of V* - V^{pi_T} under uniform rho
    double std_err = 0.0;
    std::vector<double> gaps; // per seed
};

// Suboptimality of FQI policies across dataset sizes and iteration counts,
// averaged over seeds. Requires delta <= 1/(1-gamma).
std::vector<TrendCell> theorem1_trend(const LinearRmdp& mdp, const std::vector<std::size_t>& n_list,
                                      const std::vector<int>& t_list, int n_seeds,
                                      RandomStream& rng);

} // namespace adrl
