#include "adrl/distill.hpp"

#include <cmath>
#include <stdexcept>

namespace adrl {

std::vector<double> TeacherModel::scores(const Eigen::MatrixXd& raw_states, ScoreMode mode,
                                         double alpha) const {
    if (revenue && engagement)
        return score_units(agent_delta_pairs(*revenue, *engagement, raw_states), mode, alpha);
    if (scalarized) {
        if (mode == ScoreMode::Sensitivity)
            throw std::invalid_argument(
                "teacher: sensitivity scores need per-objective agents, not a scalarized one");
        return scalarized_scores(*scalarized, raw_states);
    }
    throw std::invalid_argument("teacher: no agent configured");
}

std::vector<double> make_teacher_labels(const TeacherModel& teacher,
                                        const Eigen::MatrixXd& raw_states, ScoreMode mode,
                                        double alpha) {
    auto labels = teacher.scores(raw_states, mode, alpha);
    for (double v : labels)
        if (!std::isfinite(v))
            throw std::runtime_error("teacher labels must be finite; use combined mode or "
                                     "non-degenerate engagement effects");
    return labels;
}

DistillReport distill_ablation(const TeacherModel& teacher, const OfflineDataset& train,
                               const OfflineDataset& test, const DistillParams& params) {
    const Eigen::MatrixXd train_states = states_matrix(train);
    const Eigen::MatrixXd test_states = states_matrix(test);

    const auto train_labels = make_teacher_labels(teacher, train_states, params.mode, params.alpha);
    Eigen::VectorXd y(static_cast<long>(train_labels.size()));
    for (std::size_t i = 0; i < train_labels.size(); ++i) y[static_cast<long>(i)] = train_labels[i];

    DistillReport report;
    report.student = RegressionTree::fit(train_states, y, params.max_depth, params.min_samples_leaf);

    const auto teacher_scores = teacher.scores(test_states, params.mode, params.alpha);
    report.teacher_aucc =
        cost_curve(units_from_dataset(test, teacher_scores), params.n_buckets).aucc;

    const Eigen::VectorXd student_pred = report.student.predict(test_states);
    std::vector<double> student_scores(static_cast<std::size_t>(student_pred.size()));
    for (long i = 0; i < student_pred.size(); ++i)
        student_scores[static_cast<std::size_t>(i)] = student_pred[i];
    report.student_aucc =
        cost_curve(units_from_dataset(test, student_scores), params.n_buckets).aucc;

    const TLearner baseline = TLearner::fit(train, params.max_depth, params.min_samples_leaf);
    const auto baseline_scores =
        score_units(baseline.predict_deltas(test_states), ScoreMode::Combined, params.alpha);
    report.baseline_aucc =
        cost_curve(units_from_dataset(test, baseline_scores), params.n_buckets).aucc;
    return report;
}

} // namespace adrl
