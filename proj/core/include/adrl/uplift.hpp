#pragma once

#include <string>
#include <vector>

#include "adrl/agent.hpp"
#include "adrl/cartpole.hpp"
#include "adrl/dataset.hpp"
#include "adrl/tree.hpp"

namespace adrl {

// One evaluation unit: a session with a randomized treatment flag and its
// observed outcomes. The flag must come from randomized assignment in the
// data, never from the policy being scored.
struct RankedUnit {
    std::uint64_t unit_id = 0;
    double score = 0.0;
    bool treated = false;
    double observed_rev = 0.0;
    double observed_eng = 0.0;
};

struct CostCurvePoint {
    double fraction = 0.0; // ranked-population prefix share
    double x = 0.0;        // normalized engagement loss
    double y = 0.0;        // normalized monetization gain
};

struct CostCurve {
    std::vector<CostCurvePoint> points; // sorted by x; (0,0) and (1,1) anchored
    double aucc = 0.0;
    bool exceeds_unit_range = false; // interior points above the full-population effect
    std::vector<std::string> warnings;
};

struct DeltaPair {
    double rev = 0.0;
    double eng = 0.0;
};

enum class ScoreMode { Sensitivity, Combined };

ScoreMode parse_score_mode(const std::string& name);

// Sensitivity: -rev/eng with near-zero eng mapped to +/-inf by the sign of
// rev (free revenue ranks first, dead weight last). Combined: rev + alpha*eng.
std::vector<double> score_units(const std::vector<DeltaPair>& deltas, ScoreMode mode, double alpha);

// Model-implied treatment effects Q(s, high) - Q(s, low).
std::vector<double> scalarized_scores(const TrainedAgent& agent, const Eigen::MatrixXd& raw_states);
std::vector<DeltaPair> agent_delta_pairs(const TrainedAgent& rev_agent, const TrainedAgent& eng_agent,
                                         const Eigen::MatrixXd& raw_states);

// Prefix difference-of-means cost curve over the score ranking. Requires a
// positive full-population revenue gain and engagement loss; prefixes missing
// one arm are skipped with a warning.
CostCurve cost_curve(std::vector<RankedUnit> units, int n_buckets = 100);

Eigen::MatrixXd states_matrix(const OfflineDataset& ds);
std::vector<RankedUnit> units_from_dataset(const OfflineDataset& ds, const std::vector<double>& scores);

// Two independent CART regressors per outcome, one per treatment arm.
class TLearner {
public:
    static TLearner fit(const OfflineDataset& train, int max_depth = 8, int min_samples_leaf = 50);
    std::vector<DeltaPair> predict_deltas(const Eigen::MatrixXd& raw_states) const;

private:
    RegressionTree rev_low_, rev_high_, eng_low_, eng_high_;
};

struct PerturbSweepResult {
    std::string param;
    std::vector<double> grid;
    std::vector<double> mean_reward;
    std::vector<double> std_reward;
};

// Greedy rollouts of the agent across a one-parameter physics grid. The same
// evaluation streams are reused at every grid value, so the nominal point
// reproduces the unperturbed evaluation exactly.
PerturbSweepResult perturb_sweep(const TrainedAgent& agent, const CartPolePhysics& nominal,
                                 const std::string& param, const std::vector<double>& grid,
                                 int episodes, int n_seeds, std::uint64_t eval_seed);

} // namespace adrl
