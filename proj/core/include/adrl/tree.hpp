#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace adrl {

struct TreeNode {
    bool is_leaf = true;
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double prediction = 0.0;
    std::size_t count = 0;
};

// Greedy variance-reduction CART regressor. Split candidates are midpoints
// between consecutive sorted unique feature values; a split is accepted only
// if it strictly reduces the sum of squared deviations and both children keep
// at least min_samples_leaf samples.
class RegressionTree {
public:
    RegressionTree() = default;

    static RegressionTree fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                              int max_depth, int min_samples_leaf);

    double predict_one(const Eigen::VectorXd& x) const;
    Eigen::VectorXd predict(const Eigen::MatrixXd& X) const;

    int n_features() const { return n_features_; }
    int max_depth() const { return max_depth_; }
    std::size_t n_nodes() const { return nodes_.size(); }
    std::size_t n_leaves() const;
    int depth() const;
    const std::vector<TreeNode>& nodes() const { return nodes_; }

    // Sum of squared deviations of training targets from their leaf means.
    double training_sse(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) const;

    // One node per line; see README for the grammar.
    std::string serialize() const;
    static RegressionTree parse(const std::string& text);
    void save_file(const std::string& path) const;
    static RegressionTree load_file(const std::string& path);

private:
    int build(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::vector<int>& indices,
              int begin, int end, int depth, int min_samples_leaf);

    std::vector<TreeNode> nodes_;
    int n_features_ = 0;
    int max_depth_ = 0;
};

} // namespace adrl
