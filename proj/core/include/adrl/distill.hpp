#pragma once

#include "adrl/uplift.hpp"

namespace adrl {

// Scoring front for teacher agents: either a single scalarized agent (combined
// mode only) or a per-objective pair (both modes).
struct TeacherModel {
    const TrainedAgent* scalarized = nullptr;
    const TrainedAgent* revenue = nullptr;
    const TrainedAgent* engagement = nullptr;

    std::vector<double> scores(const Eigen::MatrixXd& raw_states, ScoreMode mode,
                               double alpha) const;
};

// Regression targets for the student: the teacher's per-unit scores, aligned
// with the input order.
std::vector<double> make_teacher_labels(const TeacherModel& teacher,
                                        const Eigen::MatrixXd& raw_states, ScoreMode mode,
                                        double alpha);

struct DistillParams {
    int max_depth = 8;
    int min_samples_leaf = 50;
    ScoreMode mode = ScoreMode::Combined;
    double alpha = 1.0;
    int n_buckets = 100;
};

struct DistillReport {
    double teacher_aucc = 0.0;
    double student_aucc = 0.0;
    double baseline_aucc = 0.0; // T-learner combined score, no teacher
    RegressionTree student;
};

// Fits the student tree to teacher labels on the training units and compares
// test AUCC for teacher ranking, student ranking, and the no-teacher baseline.
DistillReport distill_ablation(const TeacherModel& teacher, const OfflineDataset& train,
                               const OfflineDataset& test, const DistillParams& params = {});

} // namespace adrl
