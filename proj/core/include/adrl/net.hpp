#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "adrl/rng.hpp"

namespace adrl {

enum class HeadKind { Plain, Dueling };

// Which value-path parameters the robustness penalty measures.
//   LastLayer:  value-head weights only, excluding its bias.
//   AllButBias: value-head weights plus all trunk weights and biases,
//               excluding the value-head bias.
enum class RegMode { LastLayer, AllButBias };

RegMode parse_reg_mode(const std::string& name);
std::string reg_mode_name(RegMode mode);

struct DenseLayer {
    Eigen::MatrixXd W; // out x in
    Eigen::VectorXd b;
};

// Forward results with the caches backward() needs. `v` and `advantage` are
// populated for dueling heads only.
struct ForwardPass {
    Eigen::MatrixXd q;
    Eigen::VectorXd v;
    Eigen::MatrixXd advantage;
    std::vector<int> adv_argmax;

    Eigen::MatrixXd input;
    std::vector<Eigen::MatrixXd> trunk_pre;  // pre-activation per trunk layer
    std::vector<Eigen::MatrixXd> trunk_post; // relu output per trunk layer
};

struct Gradients {
    std::vector<DenseLayer> trunk;
    DenseLayer value;
    DenseLayer advantage;
    DenseLayer plain;

    double global_norm() const;
    void clip(double max_norm);
    void scale(double s);
};

// Dense ReLU trunk with either a plain linear Q head or a dueling head
// combining an affine state value V and affine advantages A as
//   q(s,a) = V(s) + A(s,a) - max_b A(s,b)
// so that max_a q(s,a) = V(s) exactly. Heads carry no nonlinearity.
// An empty hidden list makes the trunk the identity, i.e. a purely linear net.
class QNet {
public:
    QNet() = default;

    static QNet make(int input_dim, const std::vector<int>& hidden, int n_actions,
                     HeadKind head, RandomStream& rng);

    int input_dim() const { return input_dim_; }
    int n_actions() const { return n_actions_; }
    HeadKind head() const { return head_; }
    const std::vector<int>& hidden_widths() const { return hidden_; }

    // States as rows. Full pass with caches; use q_values for inference.
    ForwardPass forward(const Eigen::MatrixXd& states) const;
    Eigen::MatrixXd q_values(const Eigen::MatrixXd& states) const;

    // Exact reverse-mode gradients of a scalar loss given dL/dq.
    Gradients backward(const ForwardPass& fp, const Eigen::MatrixXd& dq) const;

    void sgd_step(const Gradients& g, double lr, double momentum = 0.0,
                  Gradients* velocity = nullptr);

    Gradients zero_gradients() const;
    double weight_norm(RegMode mode) const; // dueling value path; throws for plain heads
    std::size_t parameter_count() const;
    double max_param_difference(const QNet& other) const;

    void save(std::ofstream& out) const;
    static QNet load(std::ifstream& in);
    void save_file(const std::string& path) const;
    static QNet load_file(const std::string& path);

    const std::vector<DenseLayer>& trunk() const { return trunk_; }
    const DenseLayer& value_head() const { return value_; }
    const DenseLayer& advantage_head() const { return advantage_; }
    const DenseLayer& plain_head() const { return plain_; }

    // Mutable parameter access for gradient probes in tests.
    std::vector<double*> parameter_ptrs();

private:
    int input_dim_ = 0;
    int n_actions_ = 0;
    HeadKind head_ = HeadKind::Dueling;
    std::vector<int> hidden_;
    std::vector<DenseLayer> trunk_;
    DenseLayer value_;
    DenseLayer advantage_;
    DenseLayer plain_;
};

// lr(total_steps) = initial_lr * (0.1 + 0.9 * (1 - total_steps / max_train_steps)):
// a linear decay from the configured base rate down to a tenth of it.
// `cadence` controls how often the live rate is refreshed during training.
struct LrSchedule {
    double initial_lr = 1e-4;
    long long max_train_steps = 1;
    int cadence = 1;
    double current_lr = 1e-4;

    LrSchedule() = default;
    LrSchedule(double initial, long long max_steps, int cadence_steps = 1);

    double at(long long total_steps) const;

    // Refreshes current_lr at cadence boundaries and returns it.
    double step(long long total_steps);
};

} // namespace adrl
