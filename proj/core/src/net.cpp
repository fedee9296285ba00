#include "adrl/net.hpp"

#include <cmath>
#include <stdexcept>

#include "adrl/io.hpp"

namespace adrl {

RegMode parse_reg_mode(const std::string& name) {
    if (name == "last-layer") return RegMode::LastLayer;
    if (name == "all-but-bias") return RegMode::AllButBias;
    throw std::invalid_argument("unknown reg_mode: " + name);
}

std::string reg_mode_name(RegMode mode) {
    return mode == RegMode::LastLayer ? "last-layer" : "all-but-bias";
}

double Gradients::global_norm() const {
    double sq = 0.0;
    for (const auto& l : trunk) sq += l.W.squaredNorm() + l.b.squaredNorm();
    sq += value.W.squaredNorm() + value.b.squaredNorm();
    sq += advantage.W.squaredNorm() + advantage.b.squaredNorm();
    sq += plain.W.squaredNorm() + plain.b.squaredNorm();
    return std::sqrt(sq);
}

void Gradients::scale(double s) {
    for (auto& l : trunk) { l.W *= s; l.b *= s; }
    value.W *= s; value.b *= s;
    advantage.W *= s; advantage.b *= s;
    plain.W *= s; plain.b *= s;
}

void Gradients::clip(double max_norm) {
    const double n = global_norm();
    if (n > max_norm && n > 0.0) scale(max_norm / n);
}

namespace {

DenseLayer init_layer(int out, int in, RandomStream& rng) {
    DenseLayer l;
    const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
    l.W.resize(out, in);
    for (int i = 0; i < out; ++i)
        for (int j = 0; j < in; ++j) l.W(i, j) = rng.uniform(-bound, bound);
    l.b = Eigen::VectorXd::Zero(out);
    return l;
}

DenseLayer zero_like(const DenseLayer& l) {
    return {Eigen::MatrixXd::Zero(l.W.rows(), l.W.cols()),
            Eigen::VectorXd::Zero(l.b.size())};
}

Eigen::MatrixXd affine(const Eigen::MatrixXd& x, const DenseLayer& l) {
    return (x * l.W.transpose()).rowwise() + l.b.transpose();
}

void write_layer(std::ofstream& out, const DenseLayer& l) {
    io::write_scalar<std::uint32_t>(out, static_cast<std::uint32_t>(l.W.rows()));
    io::write_scalar<std::uint32_t>(out, static_cast<std::uint32_t>(l.W.cols()));
    for (int i = 0; i < l.W.rows(); ++i)
        for (int j = 0; j < l.W.cols(); ++j) io::write_scalar<double>(out, l.W(i, j));
    for (int i = 0; i < l.b.size(); ++i) io::write_scalar<double>(out, l.b[i]);
}

DenseLayer read_layer(std::ifstream& in) {
    DenseLayer l;
    const int rows = static_cast<int>(io::read_scalar<std::uint32_t>(in));
    const int cols = static_cast<int>(io::read_scalar<std::uint32_t>(in));
    l.W.resize(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) l.W(i, j) = io::read_scalar<double>(in);
    l.b.resize(rows);
    for (int i = 0; i < rows; ++i) l.b[i] = io::read_scalar<double>(in);
    return l;
}

void sgd_layer(DenseLayer& p, const DenseLayer& g, double lr, double momentum, DenseLayer* vel) {
    if (momentum != 0.0 && vel) {
        vel->W = momentum * vel->W + g.W;
        vel->b = momentum * vel->b + g.b;
        p.W -= lr * vel->W;
        p.b -= lr * vel->b;
    } else {
        p.W -= lr * g.W;
        p.b -= lr * g.b;
    }
}

constexpr char kMagic[4] = {'O', 'R', 'L', 'W'};
constexpr std::uint32_t kVersion = 1;

} // namespace

QNet QNet::make(int input_dim, const std::vector<int>& hidden, int n_actions,
                HeadKind head, RandomStream& rng) {
    if (input_dim <= 0 || n_actions <= 0)
        throw std::invalid_argument("QNet: input_dim and n_actions must be positive");
    for (int h : hidden)
        if (h <= 0) throw std::invalid_argument("QNet: hidden widths must be positive");

    QNet net;
    net.input_dim_ = input_dim;
    net.n_actions_ = n_actions;
    net.head_ = head;
    net.hidden_ = hidden;
    int in = input_dim;
    for (int h : hidden) {
        net.trunk_.push_back(init_layer(h, in, rng));
        in = h;
    }
    if (head == HeadKind::Dueling) {
        net.value_ = init_layer(1, in, rng);
        net.advantage_ = init_layer(n_actions, in, rng);
    } else {
        net.plain_ = init_layer(n_actions, in, rng);
    }
    return net;
}

ForwardPass QNet::forward(const Eigen::MatrixXd& states) const {
    if (states.cols() != input_dim_)
        throw std::invalid_argument("QNet: input dimension mismatch");

    ForwardPass fp;
    fp.input = states;
    Eigen::MatrixXd h = states;
    for (const auto& layer : trunk_) {
        Eigen::MatrixXd z = affine(h, layer);
        fp.trunk_pre.push_back(z);
        h = z.cwiseMax(0.0);
        fp.trunk_post.push_back(h);
    }

    const long n = states.rows();
    if (head_ == HeadKind::Dueling) {
        fp.v = affine(h, value_).col(0);
        fp.advantage = affine(h, advantage_);
        fp.adv_argmax.resize(static_cast<std::size_t>(n));
        fp.q.resize(n, n_actions_);
        for (long i = 0; i < n; ++i) {
            int best = 0;
            for (int a = 1; a < n_actions_; ++a)
                if (fp.advantage(i, a) > fp.advantage(i, best)) best = a;
            fp.adv_argmax[static_cast<std::size_t>(i)] = best;
            const double max_adv = fp.advantage(i, best);
            for (int a = 0; a < n_actions_; ++a)
                fp.q(i, a) = fp.v[i] + (fp.advantage(i, a) - max_adv);
        }
    } else {
        fp.q = affine(h, plain_);
    }
    return fp;
}

Eigen::MatrixXd QNet::q_values(const Eigen::MatrixXd& states) const {
    return forward(states).q;
}

Gradients QNet::backward(const ForwardPass& fp, const Eigen::MatrixXd& dq) const {
    if (dq.rows() != fp.q.rows() || dq.cols() != fp.q.cols())
        throw std::invalid_argument("QNet: loss-gradient shape mismatch");

    Gradients g = zero_gradients();
    const Eigen::MatrixXd& trunk_out = trunk_.empty() ? fp.input : fp.trunk_post.back();
    Eigen::MatrixXd d_trunk;

    if (head_ == HeadKind::Dueling) {
        // q(i,a) = v(i) + adv(i,a) - adv(i, b*); the max index gets the
        // negated row sum routed through it.
        Eigen::VectorXd dv = dq.rowwise().sum();
        Eigen::MatrixXd dadv = dq;
        for (long i = 0; i < dq.rows(); ++i)
            dadv(i, fp.adv_argmax[static_cast<std::size_t>(i)]) -= dv[i];

        g.value.W = dv.transpose() * trunk_out;
        g.value.b[0] = dv.sum();
        g.advantage.W = dadv.transpose() * trunk_out;
        g.advantage.b = dadv.colwise().sum().transpose();
        d_trunk = dv * value_.W + dadv * advantage_.W;
    } else {
        g.plain.W = dq.transpose() * trunk_out;
        g.plain.b = dq.colwise().sum().transpose();
        d_trunk = dq * plain_.W;
    }

    for (int li = static_cast<int>(trunk_.size()) - 1; li >= 0; --li) {
        const Eigen::MatrixXd& z = fp.trunk_pre[static_cast<std::size_t>(li)];
        Eigen::MatrixXd dz = d_trunk.cwiseProduct((z.array() > 0.0).cast<double>().matrix());
        const Eigen::MatrixXd& layer_in =
            (li == 0) ? fp.input : fp.trunk_post[static_cast<std::size_t>(li - 1)];
        g.trunk[static_cast<std::size_t>(li)].W = dz.transpose() * layer_in;
        g.trunk[static_cast<std::size_t>(li)].b = dz.colwise().sum().transpose();
        d_trunk = dz * trunk_[static_cast<std::size_t>(li)].W;
    }
    return g;
}

Gradients QNet::zero_gradients() const {
    Gradients g;
    for (const auto& l : trunk_) g.trunk.push_back(zero_like(l));
    g.value = head_ == HeadKind::Dueling ? zero_like(value_) : DenseLayer{};
    g.advantage = head_ == HeadKind::Dueling ? zero_like(advantage_) : DenseLayer{};
    g.plain = head_ == HeadKind::Plain ? zero_like(plain_) : DenseLayer{};
    if (head_ == HeadKind::Dueling) {
        g.plain.W.resize(0, 0);
        g.plain.b.resize(0);
    } else {
        g.value.W.resize(0, 0);
        g.value.b.resize(0);
        g.advantage.W.resize(0, 0);
        g.advantage.b.resize(0);
    }
    return g;
}

void QNet::sgd_step(const Gradients& g, double lr, double momentum, Gradients* velocity) {
    for (std::size_t i = 0; i < trunk_.size(); ++i)
        sgd_layer(trunk_[i], g.trunk[i], lr, momentum, velocity ? &velocity->trunk[i] : nullptr);
    if (head_ == HeadKind::Dueling) {
        sgd_layer(value_, g.value, lr, momentum, velocity ? &velocity->value : nullptr);
        sgd_layer(advantage_, g.advantage, lr, momentum, velocity ? &velocity->advantage : nullptr);
    } else {
        sgd_layer(plain_, g.plain, lr, momentum, velocity ? &velocity->plain : nullptr);
    }
}

double QNet::weight_norm(RegMode mode) const {
    if (head_ != HeadKind::Dueling)
        throw std::logic_error("QNet: weight_norm requires a value head");
    double sq = value_.W.squaredNorm(); // value-head bias never counts
    if (mode == RegMode::AllButBias)
        for (const auto& l : trunk_) sq += l.W.squaredNorm() + l.b.squaredNorm();
    return std::sqrt(sq);
}

std::size_t QNet::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : trunk_) n += static_cast<std::size_t>(l.W.size() + l.b.size());
    if (head_ == HeadKind::Dueling)
        n += static_cast<std::size_t>(value_.W.size() + value_.b.size() +
                                      advantage_.W.size() + advantage_.b.size());
    else
        n += static_cast<std::size_t>(plain_.W.size() + plain_.b.size());
    return n;
}

double QNet::max_param_difference(const QNet& other) const {
    auto layer_diff = [](const DenseLayer& a, const DenseLayer& b) {
        double d = 0.0;
        if (a.W.size() > 0) d = std::max(d, (a.W - b.W).cwiseAbs().maxCoeff());
        if (a.b.size() > 0) d = std::max(d, (a.b - b.b).cwiseAbs().maxCoeff());
        return d;
    };
    double d = 0.0;
    for (std::size_t i = 0; i < trunk_.size(); ++i)
        d = std::max(d, layer_diff(trunk_[i], other.trunk_[i]));
    if (head_ == HeadKind::Dueling) {
        d = std::max(d, layer_diff(value_, other.value_));
        d = std::max(d, layer_diff(advantage_, other.advantage_));
    } else {
        d = std::max(d, layer_diff(plain_, other.plain_));
    }
    return d;
}

std::vector<double*> QNet::parameter_ptrs() {
    std::vector<double*> ptrs;
    auto add_layer = [&](DenseLayer& l) {
        for (int i = 0; i < l.W.rows(); ++i)
            for (int j = 0; j < l.W.cols(); ++j) ptrs.push_back(&l.W(i, j));
        for (int i = 0; i < l.b.size(); ++i) ptrs.push_back(&l.b[i]);
    };
    for (auto& l : trunk_) add_layer(l);
    if (head_ == HeadKind::Dueling) {
        add_layer(value_);
        add_layer(advantage_);
    } else {
        add_layer(plain_);
    }
    return ptrs;
}

void QNet::save(std::ofstream& out) const {
    out.write(kMagic, 4);
    io::write_scalar<std::uint32_t>(out, kVersion);
    io::write_scalar<std::uint8_t>(out, head_ == HeadKind::Dueling ? 1 : 0);
    io::write_scalar<std::uint32_t>(out, static_cast<std::uint32_t>(input_dim_));
    io::write_scalar<std::uint32_t>(out, static_cast<std::uint32_t>(hidden_.size()));
    for (int h : hidden_) io::write_scalar<std::uint32_t>(out, static_cast<std::uint32_t>(h));
    io::write_scalar<std::uint32_t>(out, static_cast<std::uint32_t>(n_actions_));
    for (const auto& l : trunk_) write_layer(out, l);
    if (head_ == HeadKind::Dueling) {
        write_layer(out, value_);
        write_layer(out, advantage_);
    } else {
        write_layer(out, plain_);
    }
}

QNet QNet::load(std::ifstream& in) {
    char magic[4];
    in.read(magic, 4);
    if (!in || !std::equal(magic, magic + 4, kMagic))
        throw std::runtime_error("QNet: bad checkpoint magic");
    if (io::read_scalar<std::uint32_t>(in) != kVersion)
        throw std::runtime_error("QNet: unsupported checkpoint version");

    QNet net;
    net.head_ = io::read_scalar<std::uint8_t>(in) != 0 ? HeadKind::Dueling : HeadKind::Plain;
    net.input_dim_ = static_cast<int>(io::read_scalar<std::uint32_t>(in));
    const auto n_hidden = io::read_scalar<std::uint32_t>(in);
    net.hidden_.resize(n_hidden);
    for (auto& h : net.hidden_) h = static_cast<int>(io::read_scalar<std::uint32_t>(in));
    net.n_actions_ = static_cast<int>(io::read_scalar<std::uint32_t>(in));
    for (std::uint32_t i = 0; i < n_hidden; ++i) net.trunk_.push_back(read_layer(in));
    if (net.head_ == HeadKind::Dueling) {
        net.value_ = read_layer(in);
        net.advantage_ = read_layer(in);
    } else {
        net.plain_ = read_layer(in);
    }
    return net;
}

void QNet::save_file(const std::string& path) const {
    auto out = io::open_write(path);
    save(out);
    if (!out) throw std::runtime_error("QNet: write failed: " + path);
}

QNet QNet::load_file(const std::string& path) {
    auto in = io::open_read(path);
    return load(in);
}

LrSchedule::LrSchedule(double initial, long long max_steps, int cadence_steps)
    : initial_lr(initial), max_train_steps(max_steps), cadence(cadence_steps),
      current_lr(initial) {
    if (initial <= 0.0) throw std::invalid_argument("LrSchedule: initial_lr must be > 0");
    if (max_steps < 1) throw std::invalid_argument("LrSchedule: max_train_steps must be >= 1");
    if (cadence < 1) throw std::invalid_argument("LrSchedule: cadence must be >= 1");
}

double LrSchedule::at(long long total_steps) const {
    if (total_steps < 0 || total_steps > max_train_steps)
        throw std::invalid_argument("LrSchedule: total_steps out of range");
    const double progress = static_cast<double>(total_steps) / static_cast<double>(max_train_steps);
    return initial_lr * (0.1 + 0.9 * (1.0 - progress));
}

double LrSchedule::step(long long total_steps) {
    if (total_steps % cadence == 0) current_lr = at(total_steps);
    return current_lr;
}

} // namespace adrl
