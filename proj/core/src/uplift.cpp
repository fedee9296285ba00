#include "adrl/uplift.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace adrl {

ScoreMode parse_score_mode(const std::string& name) {
    if (name == "sensitivity") return ScoreMode::Sensitivity;
    if (name == "combined") return ScoreMode::Combined;
    throw std::invalid_argument("unknown score mode: " + name);
}

std::vector<double> score_units(const std::vector<DeltaPair>& deltas, ScoreMode mode, double alpha) {
    std::vector<double> scores(deltas.size());
    constexpr double kEngFloor = 1e-9;
    for (std::size_t i = 0; i < deltas.size(); ++i) {
        if (mode == ScoreMode::Combined) {
            scores[i] = deltas[i].rev + alpha * deltas[i].eng;
        } else {
            if (std::abs(deltas[i].eng) < kEngFloor) {
                scores[i] = deltas[i].rev > 0.0 ? std::numeric_limits<double>::infinity()
                                                : -std::numeric_limits<double>::infinity();
            } else {
                scores[i] = -deltas[i].rev / deltas[i].eng;
            }
        }
    }
    return scores;
}

std::vector<double> scalarized_scores(const TrainedAgent& agent, const Eigen::MatrixXd& raw_states) {
    const Eigen::MatrixXd q = agent.q_values(raw_states);
    if (q.cols() != 2)
        throw std::invalid_argument("scalarized_scores: expected a two-action agent");
    std::vector<double> scores(static_cast<std::size_t>(q.rows()));
    for (long i = 0; i < q.rows(); ++i) scores[static_cast<std::size_t>(i)] = q(i, 1) - q(i, 0);
    return scores;
}

std::vector<DeltaPair> agent_delta_pairs(const TrainedAgent& rev_agent, const TrainedAgent& eng_agent,
                                         const Eigen::MatrixXd& raw_states) {
    const Eigen::MatrixXd q_rev = rev_agent.q_values(raw_states);
    const Eigen::MatrixXd q_eng = eng_agent.q_values(raw_states);
    if (q_rev.cols() != 2 || q_eng.cols() != 2)
        throw std::invalid_argument("agent_delta_pairs: expected two-action agents");
    std::vector<DeltaPair> deltas(static_cast<std::size_t>(q_rev.rows()));
    for (long i = 0; i < q_rev.rows(); ++i) {
        deltas[static_cast<std::size_t>(i)].rev = q_rev(i, 1) - q_rev(i, 0);
        deltas[static_cast<std::size_t>(i)].eng = q_eng(i, 1) - q_eng(i, 0);
    }
    return deltas;
}

CostCurve cost_curve(std::vector<RankedUnit> units, int n_buckets) {
    if (n_buckets < 1) throw std::invalid_argument("cost_curve: n_buckets must be >= 1");
    if (units.size() < 2) throw std::invalid_argument("cost_curve: need at least two units");

    std::sort(units.begin(), units.end(), [](const RankedUnit& a, const RankedUnit& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.unit_id < b.unit_id; // stable under score ties
    });

    const std::size_t n = units.size();
    std::size_t n_treated = 0, n_control = 0;
    double rev_t = 0.0, rev_c = 0.0, eng_t = 0.0, eng_c = 0.0;
    for (const auto& u : units) {
        if (u.treated) {
            ++n_treated;
            rev_t += u.observed_rev;
            eng_t += u.observed_eng;
        } else {
            ++n_control;
            rev_c += u.observed_rev;
            eng_c += u.observed_eng;
        }
    }
    if (n_treated == 0 || n_control == 0)
        throw std::invalid_argument("cost_curve: both treated and control units are required");

    // Cumulative incremental effects: the prefix difference of means scaled by
    // the prefix size estimates the summed treatment effect of treating the
    // whole prefix. Random rankings then trace the diagonal.
    const double rev_gain_full =
        (rev_t / n_treated - rev_c / n_control) * static_cast<double>(n);
    const double eng_loss_full =
        -(eng_t / n_treated - eng_c / n_control) * static_cast<double>(n);
    if (rev_gain_full <= 0.0 || eng_loss_full <= 0.0)
        throw std::runtime_error(
            "cost_curve: normalization undefined (population shows no aggregate trade-off)");

    CostCurve curve;
    curve.points.push_back({0.0, 0.0, 0.0});

    std::size_t cursor = 0, pt = 0, pc = 0;
    double prt = 0.0, prc = 0.0, pet = 0.0, pec = 0.0;
    for (int k = 1; k <= n_buckets; ++k) {
        const std::size_t prefix = (static_cast<std::size_t>(k) * n) / static_cast<std::size_t>(n_buckets);
        while (cursor < prefix) {
            const auto& u = units[cursor++];
            if (u.treated) {
                ++pt;
                prt += u.observed_rev;
                pet += u.observed_eng;
            } else {
                ++pc;
                prc += u.observed_rev;
                pec += u.observed_eng;
            }
        }
        if (pt == 0 || pc == 0) {
            curve.warnings.push_back("prefix " + std::to_string(k) + "/" +
                                     std::to_string(n_buckets) + " lacks one arm; bucket skipped");
            continue;
        }
        const double scale = static_cast<double>(cursor);
        const double rev_gain = (prt / pt - prc / pc) * scale;
        const double eng_loss = -(pet / pt - pec / pc) * scale;
        CostCurvePoint point;
        point.fraction = static_cast<double>(k) / n_buckets;
        point.x = eng_loss / eng_loss_full;
        point.y = rev_gain / rev_gain_full;
        curve.points.push_back(point);
        if (point.y > 1.0 + 1e-12 || point.x > 1.0 + 1e-12 || point.y < -1e-12 || point.x < -1e-12)
            curve.exceeds_unit_range = true;
    }

    std::stable_sort(curve.points.begin(), curve.points.end(),
                     [](const CostCurvePoint& a, const CostCurvePoint& b) { return a.x < b.x; });

    double area = 0.0;
    for (std::size_t i = 1; i < curve.points.size(); ++i) {
        const auto& p0 = curve.points[i - 1];
        const auto& p1 = curve.points[i];
        area += (p1.x - p0.x) * 0.5 * (p0.y + p1.y);
    }
    curve.aucc = area;
    return curve;
}

Eigen::MatrixXd states_matrix(const OfflineDataset& ds) {
    Eigen::MatrixXd X(ds.size(), ds.state_dim());
    for (std::size_t i = 0; i < ds.size(); ++i) X.row(static_cast<long>(i)) = ds[i].state.transpose();
    return X;
}

std::vector<RankedUnit> units_from_dataset(const OfflineDataset& ds, const std::vector<double>& scores) {
    if (scores.size() != ds.size())
        throw std::invalid_argument("units_from_dataset: score count mismatch");
    std::vector<RankedUnit> units(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        units[i].unit_id = i;
        units[i].score = scores[i];
        units[i].treated = ds[i].action == 1;
        units[i].observed_rev = ds[i].reward_rev;
        units[i].observed_eng = ds[i].reward_eng;
    }
    return units;
}

TLearner TLearner::fit(const OfflineDataset& train, int max_depth, int min_samples_leaf) {
    std::vector<long> low_rows, high_rows;
    for (std::size_t i = 0; i < train.size(); ++i)
        (train[i].action == 0 ? low_rows : high_rows).push_back(static_cast<long>(i));
    if (low_rows.empty() || high_rows.empty())
        throw std::invalid_argument("t_learner: both treatment arms must be present");

    auto gather = [&](const std::vector<long>& rows, auto outcome) {
        Eigen::MatrixXd X(static_cast<long>(rows.size()), train.state_dim());
        Eigen::VectorXd y(static_cast<long>(rows.size()));
        for (std::size_t r = 0; r < rows.size(); ++r) {
            const auto& t = train[static_cast<std::size_t>(rows[r])];
            X.row(static_cast<long>(r)) = t.state.transpose();
            y[static_cast<long>(r)] = outcome(t);
        }
        return std::make_pair(std::move(X), std::move(y));
    };

    TLearner model;
    {
        auto [X, y] = gather(low_rows, [](const Transition& t) { return t.reward_rev; });
        model.rev_low_ = RegressionTree::fit(X, y, max_depth, min_samples_leaf);
    }
    {
        auto [X, y] = gather(high_rows, [](const Transition& t) { return t.reward_rev; });
        model.rev_high_ = RegressionTree::fit(X, y, max_depth, min_samples_leaf);
    }
    {
        auto [X, y] = gather(low_rows, [](const Transition& t) { return t.reward_eng; });
        model.eng_low_ = RegressionTree::fit(X, y, max_depth, min_samples_leaf);
    }
    {
        auto [X, y] = gather(high_rows, [](const Transition& t) { return t.reward_eng; });
        model.eng_high_ = RegressionTree::fit(X, y, max_depth, min_samples_leaf);
    }
    return model;
}

std::vector<DeltaPair> TLearner::predict_deltas(const Eigen::MatrixXd& raw_states) const {
    std::vector<DeltaPair> deltas(static_cast<std::size_t>(raw_states.rows()));
    for (long i = 0; i < raw_states.rows(); ++i) {
        const Eigen::VectorXd x = raw_states.row(i).transpose();
        deltas[static_cast<std::size_t>(i)].rev = rev_high_.predict_one(x) - rev_low_.predict_one(x);
        deltas[static_cast<std::size_t>(i)].eng = eng_high_.predict_one(x) - eng_low_.predict_one(x);
    }
    return deltas;
}

PerturbSweepResult perturb_sweep(const TrainedAgent& agent, const CartPolePhysics& nominal,
                                 const std::string& param, const std::vector<double>& grid,
                                 int episodes, int n_seeds, std::uint64_t eval_seed) {
    if (grid.empty()) throw std::invalid_argument("perturb_sweep: empty grid");
    if (episodes < 1 || n_seeds < 1)
        throw std::invalid_argument("perturb_sweep: episodes and seeds must be >= 1");

    double nominal_value = 0.0;
    if (param == "force_mag") nominal_value = nominal.force_mag;
    else if (param == "pole_length") nominal_value = nominal.pole_length;
    else if (param == "action_flip_prob") nominal_value = nominal.action_flip_prob;
    else throw std::invalid_argument("perturb_sweep: unknown parameter " + param);

    bool has_nominal = false;
    for (double v : grid) has_nominal = has_nominal || std::abs(v - nominal_value) < 1e-12;
    if (!has_nominal)
        throw std::invalid_argument("perturb_sweep: grid must include the nominal value");

    PerturbSweepResult result;
    result.param = param;
    result.grid = grid;
    for (double v : grid) {
        CartPolePhysics physics = nominal;
        if (param == "force_mag") physics.force_mag = v;
        else if (param == "pole_length") physics.pole_length = v;
        else physics.action_flip_prob = v;

        double sum = 0.0, sq = 0.0;
        const long total = static_cast<long>(episodes) * n_seeds;
        for (int s = 0; s < n_seeds; ++s) {
            // Streams depend on (eval_seed, seed index) only, never the grid value.
            RandomStream rng = RandomStream(eval_seed).split(static_cast<std::uint64_t>(s));
            CartPoleEnv env(physics);
            for (int e = 0; e < episodes; ++e) {
                const double ret = greedy_episode_return(env, agent, rng, agent.cfg.alpha);
                sum += ret;
                sq += ret * ret;
            }
        }
        const double mean = sum / total;
        const double var = std::max(0.0, sq / total - mean * mean);
        result.mean_reward.push_back(mean);
        result.std_reward.push_back(std::sqrt(var));
    }
    return result;
}

} // namespace adrl
