#include "adrl/tree.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace adrl {

namespace {

double subset_sse(const Eigen::VectorXd& y, const std::vector<int>& idx, int begin, int end) {
    double sum = 0.0, sq = 0.0;
    for (int i = begin; i < end; ++i) {
        sum += y[idx[static_cast<std::size_t>(i)]];
        sq += y[idx[static_cast<std::size_t>(i)]] * y[idx[static_cast<std::size_t>(i)]];
    }
    const double n = static_cast<double>(end - begin);
    return sq - sum * sum / n;
}

} // namespace

RegressionTree RegressionTree::fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                   int max_depth, int min_samples_leaf) {
    if (X.rows() < 1) throw std::invalid_argument("tree: need at least one sample");
    if (X.rows() != y.size()) throw std::invalid_argument("tree: X/y size mismatch");
    if (max_depth < 0) throw std::invalid_argument("tree: max_depth must be >= 0");
    if (min_samples_leaf < 1) throw std::invalid_argument("tree: min_samples_leaf must be >= 1");

    RegressionTree tree;
    tree.n_features_ = static_cast<int>(X.cols());
    tree.max_depth_ = max_depth;
    std::vector<int> indices(static_cast<std::size_t>(X.rows()));
    std::iota(indices.begin(), indices.end(), 0);
    tree.build(X, y, indices, 0, static_cast<int>(X.rows()), 0, min_samples_leaf);
    return tree;
}

int RegressionTree::build(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                          std::vector<int>& indices, int begin, int end, int depth,
                          int min_samples_leaf) {
    const int n = end - begin;
    double sum = 0.0;
    for (int i = begin; i < end; ++i) sum += y[indices[static_cast<std::size_t>(i)]];
    const double mean = sum / n;

    const int node_id = static_cast<int>(nodes_.size());
    nodes_.push_back({});
    nodes_[static_cast<std::size_t>(node_id)].prediction = mean;
    nodes_[static_cast<std::size_t>(node_id)].count = static_cast<std::size_t>(n);

    if (depth >= max_depth_ || n < 2 * min_samples_leaf) return node_id;

    const double parent_sse = subset_sse(y, indices, begin, end);
    if (parent_sse <= 1e-12) return node_id; // constant targets

    int best_feature = -1;
    double best_threshold = 0.0;
    double best_gain = 0.0;
    std::vector<int> sorted(indices.begin() + begin, indices.begin() + end);

    for (int f = 0; f < n_features_; ++f) {
        std::sort(sorted.begin(), sorted.end(), [&](int a, int b) {
            if (X(a, f) != X(b, f)) return X(a, f) < X(b, f);
            return a < b;
        });
        double left_sum = 0.0, left_sq = 0.0;
        double total_sum = 0.0, total_sq = 0.0;
        for (int i : sorted) {
            total_sum += y[i];
            total_sq += y[i] * y[i];
        }
        for (int k = 1; k < n; ++k) {
            const int i = sorted[static_cast<std::size_t>(k - 1)];
            left_sum += y[i];
            left_sq += y[i] * y[i];
            if (k < min_samples_leaf || n - k < min_samples_leaf) continue;
            const double lo = X(sorted[static_cast<std::size_t>(k - 1)], f);
            const double hi = X(sorted[static_cast<std::size_t>(k)], f);
            if (lo == hi) continue; // not a boundary between distinct values
            const double sse_left = left_sq - left_sum * left_sum / k;
            const double right_sum = total_sum - left_sum;
            const double sse_right = (total_sq - left_sq) - right_sum * right_sum / (n - k);
            const double gain = parent_sse - sse_left - sse_right;
            if (gain > best_gain + 1e-12) {
                best_gain = gain;
                best_feature = f;
                best_threshold = lo + 0.5 * (hi - lo);
            }
        }
    }

    if (best_feature < 0 || best_gain <= 1e-12) return node_id;

    // Partition in place: left takes x[feature] <= threshold.
    auto mid = std::stable_partition(
        indices.begin() + begin, indices.begin() + end,
        [&](int i) { return X(i, best_feature) <= best_threshold; });
    const int split_at = static_cast<int>(mid - indices.begin());
    if (split_at == begin || split_at == end) return node_id; // degenerate under fp

    const int left_id = build(X, y, indices, begin, split_at, depth + 1, min_samples_leaf);
    const int right_id = build(X, y, indices, split_at, end, depth + 1, min_samples_leaf);

    TreeNode& node = nodes_[static_cast<std::size_t>(node_id)];
    node.is_leaf = false;
    node.feature = best_feature;
    node.threshold = best_threshold;
    node.left = left_id;
    node.right = right_id;
    return node_id;
}

double RegressionTree::predict_one(const Eigen::VectorXd& x) const {
    if (nodes_.empty()) throw std::logic_error("tree: not fitted");
    if (x.size() != n_features_) throw std::invalid_argument("tree: feature dimension mismatch");
    int id = 0;
    while (!nodes_[static_cast<std::size_t>(id)].is_leaf) {
        const TreeNode& node = nodes_[static_cast<std::size_t>(id)];
        id = (x[node.feature] <= node.threshold) ? node.left : node.right;
    }
    return nodes_[static_cast<std::size_t>(id)].prediction;
}

Eigen::VectorXd RegressionTree::predict(const Eigen::MatrixXd& X) const {
    Eigen::VectorXd out(X.rows());
    for (int i = 0; i < X.rows(); ++i) out[i] = predict_one(X.row(i).transpose());
    return out;
}

std::size_t RegressionTree::n_leaves() const {
    std::size_t n = 0;
    for (const auto& node : nodes_) n += node.is_leaf ? 1 : 0;
    return n;
}

int RegressionTree::depth() const {
    if (nodes_.empty()) return 0;
    // Iterative depth computation over the node array.
    std::vector<int> depth_of(nodes_.size(), 0);
    int max_d = 0;
    for (std::size_t id = 0; id < nodes_.size(); ++id) {
        const auto& node = nodes_[id];
        if (!node.is_leaf) {
            depth_of[static_cast<std::size_t>(node.left)] = depth_of[id] + 1;
            depth_of[static_cast<std::size_t>(node.right)] = depth_of[id] + 1;
        }
        max_d = std::max(max_d, depth_of[id]);
    }
    return max_d;
}

double RegressionTree::training_sse(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) const {
    double sse = 0.0;
    for (int i = 0; i < X.rows(); ++i) {
        const double r = y[i] - predict_one(X.row(i).transpose());
        sse += r * r;
    }
    return sse;
}

std::string RegressionTree::serialize() const {
    std::ostringstream out;
    out << "tree v1 n_features=" << n_features_ << " max_depth=" << max_depth_
        << " n_nodes=" << nodes_.size() << "\n";
    char buf[64];
    for (std::size_t id = 0; id < nodes_.size(); ++id) {
        const auto& node = nodes_[id];
        if (node.is_leaf) {
            std::snprintf(buf, sizeof(buf), "%.17g", node.prediction);
            out << id << " leaf " << buf << " " << node.count << "\n";
        } else {
            std::snprintf(buf, sizeof(buf), "%.17g", node.threshold);
            out << id << " split " << node.feature << " " << buf << " " << node.left << " "
                << node.right << "\n";
        }
    }
    return out.str();
}

RegressionTree RegressionTree::parse(const std::string& text) {
    std::istringstream in(text);
    std::string word;
    in >> word;
    if (word != "tree") throw std::runtime_error("tree: bad serialization header");
    in >> word;
    if (word != "v1") throw std::runtime_error("tree: unsupported version");

    RegressionTree tree;
    std::size_t n_nodes = 0;
    for (int i = 0; i < 3; ++i) {
        in >> word;
        const auto eq = word.find('=');
        if (eq == std::string::npos) throw std::runtime_error("tree: malformed header field");
        const std::string key = word.substr(0, eq);
        const std::string val = word.substr(eq + 1);
        if (key == "n_features") tree.n_features_ = std::stoi(val);
        else if (key == "max_depth") tree.max_depth_ = std::stoi(val);
        else if (key == "n_nodes") n_nodes = std::stoul(val);
        else throw std::runtime_error("tree: unknown header field " + key);
    }

    tree.nodes_.resize(n_nodes);
    for (std::size_t i = 0; i < n_nodes; ++i) {
        std::size_t id;
        std::string kind;
        in >> id >> kind;
        if (!in || id >= n_nodes) throw std::runtime_error("tree: malformed node line");
        TreeNode node;
        if (kind == "leaf") {
            in >> node.prediction >> node.count;
            node.is_leaf = true;
        } else if (kind == "split") {
            in >> node.feature >> node.threshold >> node.left >> node.right;
            node.is_leaf = false;
        } else {
            throw std::runtime_error("tree: unknown node kind " + kind);
        }
        tree.nodes_[id] = node;
    }
    if (!in) throw std::runtime_error("tree: truncated serialization");
    return tree;
}

void RegressionTree::save_file(const std::string& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("tree: cannot open for writing: " + path);
    out << serialize();
}

RegressionTree RegressionTree::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("tree: cannot open for reading: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

} // namespace adrl
