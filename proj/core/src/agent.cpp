#include "adrl/agent.hpp"

#include <cmath>
#include <deque>
#include <stdexcept>

#include "adrl/io.hpp"

namespace adrl {

Variant parse_variant(const std::string& name) {
    if (name == "dqn") return Variant::Dqn;
    if (name == "dueling") return Variant::Dueling;
    if (name == "robust-dueling") return Variant::RobustDueling;
    throw std::invalid_argument("unknown variant: " + name);
}

std::string variant_name(Variant v) {
    switch (v) {
        case Variant::Dqn: return "dqn";
        case Variant::Dueling: return "dueling";
        default: return "robust-dueling";
    }
}

void AgentConfig::validate() const {
    if (gamma < 0.0 || gamma >= 1.0) throw std::invalid_argument("agent: gamma must be in [0,1)");
    if (delta < 0.0) throw std::invalid_argument("agent: delta must be >= 0");
    if (alpha <= 0.0) throw std::invalid_argument("agent: alpha must be > 0");
    if (target_sync_every < 1) throw std::invalid_argument("agent: target_sync_every must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("agent: batch_size must be >= 1");
    if (train_steps < 0) throw std::invalid_argument("agent: train_steps must be >= 0");
    if (initial_lr < 0.0) throw std::invalid_argument("agent: initial_lr must be >= 0");
    if (grad_clip <= 0.0) throw std::invalid_argument("agent: grad_clip must be > 0");
}

TdBatch assemble_batch(const OfflineDataset& ds, const std::vector<std::size_t>& indices,
                       double alpha, RewardMix mix) {
    const auto& norm = ds.normalization();
    const long n = static_cast<long>(indices.size());
    TdBatch b;
    b.states.resize(n, ds.state_dim());
    b.next_states.resize(n, ds.state_dim());
    b.actions.resize(n);
    b.rewards.resize(n);
    b.not_done.resize(n);
    for (long i = 0; i < n; ++i) {
        const Transition& t = ds[indices[static_cast<std::size_t>(i)]];
        b.states.row(i) = norm.apply(t.state).transpose();
        b.next_states.row(i) = norm.apply(t.next_state).transpose();
        b.actions[i] = static_cast<int>(t.action);
        switch (mix) {
            case RewardMix::Scalarized: b.rewards[i] = t.reward_rev + alpha * t.reward_eng; break;
            case RewardMix::RevenueOnly: b.rewards[i] = t.reward_rev; break;
            case RewardMix::EngagementOnly: b.rewards[i] = t.reward_eng; break;
        }
        b.not_done[i] = t.done ? 0.0 : 1.0;
    }
    return b;
}

Eigen::VectorXd td_targets_dqn(const TdBatch& batch, const QNet& target, double gamma) {
    if (batch.rewards.size() == 0) throw std::invalid_argument("td_targets: empty batch");
    const Eigen::MatrixXd q_next = target.q_values(batch.next_states);
    const Eigen::VectorXd max_q = q_next.rowwise().maxCoeff();
    return batch.rewards.array() + gamma * batch.not_done.array() * max_q.array();
}

Eigen::VectorXd td_targets_robust(const TdBatch& batch, const QNet& target, double gamma,
                                  double delta, RegMode reg_mode) {
    if (batch.rewards.size() == 0) throw std::invalid_argument("td_targets: empty batch");
    if (target.head() != HeadKind::Dueling)
        throw std::invalid_argument("td_targets_robust: target must have a dueling head");
    if (delta < 0.0) throw std::invalid_argument("td_targets_robust: delta must be >= 0");
    const ForwardPass fp = target.forward(batch.next_states);
    const double penalty = gamma * delta * target.weight_norm(reg_mode);
    return batch.rewards.array() +
           batch.not_done.array() * (gamma * fp.v.array() - penalty);
}

Eigen::MatrixXd TrainedAgent::q_values(const Eigen::MatrixXd& raw_states) const {
    return net.q_values(norm.apply_rows(raw_states));
}

int TrainedAgent::greedy_action(const Eigen::VectorXd& raw_features) const {
    const Eigen::MatrixXd q = q_values(raw_features.transpose());
    int best = 0;
    for (int a = 1; a < q.cols(); ++a)
        if (q(0, a) > q(0, best)) best = a;
    return best;
}

namespace {

void write_normalization(std::ofstream& out, const Normalization& norm) {
    io::write_scalar<std::uint8_t>(out, norm.fitted ? 1 : 0);
    io::write_scalar<std::uint32_t>(out, static_cast<std::uint32_t>(norm.mean.size()));
    for (int i = 0; i < norm.mean.size(); ++i) io::write_scalar<double>(out, norm.mean[i]);
    for (int i = 0; i < norm.stddev.size(); ++i) io::write_scalar<double>(out, norm.stddev[i]);
}

Normalization read_normalization(std::ifstream& in) {
    Normalization norm;
    norm.fitted = io::read_scalar<std::uint8_t>(in) != 0;
    const auto d = io::read_scalar<std::uint32_t>(in);
    norm.mean.resize(d);
    norm.stddev.resize(d);
    for (std::uint32_t i = 0; i < d; ++i) norm.mean[i] = io::read_scalar<double>(in);
    for (std::uint32_t i = 0; i < d; ++i) norm.stddev[i] = io::read_scalar<double>(in);
    return norm;
}

} // namespace

void TrainedAgent::save(const std::string& path) const {
    auto out = io::open_write(path);
    net.save(out);
    write_normalization(out, norm);
    io::write_scalar<std::uint8_t>(out, static_cast<std::uint8_t>(variant));
    io::write_scalar<double>(out, cfg.gamma);
    io::write_scalar<double>(out, cfg.delta);
    io::write_scalar<double>(out, cfg.alpha);
    io::write_scalar<std::uint8_t>(out, cfg.reg_mode == RegMode::LastLayer ? 0 : 1);
    io::write_scalar<std::uint32_t>(out, static_cast<std::uint32_t>(cfg.target_sync_every));
    io::write_scalar<std::uint32_t>(out, static_cast<std::uint32_t>(cfg.batch_size));
    io::write_scalar<std::int64_t>(out, cfg.train_steps);
    io::write_scalar<std::uint64_t>(out, cfg.seed);
    io::write_scalar<std::uint8_t>(out, static_cast<std::uint8_t>(cfg.reward_mix));
    if (!out) throw std::runtime_error("agent: write failed: " + path);
}

TrainedAgent TrainedAgent::load(const std::string& path) {
    auto in = io::open_read(path);
    TrainedAgent a;
    a.net = QNet::load(in);
    a.target = a.net;
    a.norm = read_normalization(in);
    a.variant = static_cast<Variant>(io::read_scalar<std::uint8_t>(in));
    a.cfg.gamma = io::read_scalar<double>(in);
    a.cfg.delta = io::read_scalar<double>(in);
    a.cfg.alpha = io::read_scalar<double>(in);
    a.cfg.reg_mode = io::read_scalar<std::uint8_t>(in) == 0 ? RegMode::LastLayer : RegMode::AllButBias;
    a.cfg.target_sync_every = static_cast<int>(io::read_scalar<std::uint32_t>(in));
    a.cfg.batch_size = static_cast<int>(io::read_scalar<std::uint32_t>(in));
    a.cfg.train_steps = io::read_scalar<std::int64_t>(in);
    a.cfg.seed = io::read_scalar<std::uint64_t>(in);
    a.cfg.reward_mix = static_cast<RewardMix>(io::read_scalar<std::uint8_t>(in));
    a.cfg.hidden = a.net.hidden_widths();
    return a;
}

TrainedAgent train_offline(const OfflineDataset& ds, const AgentConfig& cfg, Variant variant) {
    cfg.validate();
    if (ds.empty()) throw std::invalid_argument("train_offline: empty dataset");
    if (variant != Variant::RobustDueling && cfg.delta != 0.0)
        throw std::invalid_argument("train_offline: delta > 0 requires the robust-dueling variant");

    const HeadKind head = variant == Variant::Dqn ? HeadKind::Plain : HeadKind::Dueling;
    RandomStream init_rng = RandomStream(cfg.seed).split(1);
    RandomStream batch_rng = RandomStream(cfg.seed).split(2);

    TrainedAgent agent;
    agent.variant = variant;
    agent.cfg = cfg;
    agent.norm = ds.normalization();
    agent.net = QNet::make(ds.state_dim(), cfg.hidden, ds.n_actions(), head, init_rng);
    agent.target = agent.net;
    agent.loss_trace.reserve(static_cast<std::size_t>(cfg.train_steps));

    LrSchedule sched(cfg.initial_lr > 0.0 ? cfg.initial_lr : 1.0,
                     std::max<long long>(cfg.train_steps, 1), cfg.lr_cadence);
    Gradients velocity = agent.net.zero_gradients();
    const double inv_batch = 1.0 / static_cast<double>(cfg.batch_size);

    for (long long step = 0; step < cfg.train_steps; ++step) {
        const auto idx = sample_batch(ds, static_cast<std::size_t>(cfg.batch_size), batch_rng);
        const TdBatch batch = assemble_batch(ds, idx, cfg.alpha, cfg.reward_mix);

        const Eigen::VectorXd y = variant == Variant::RobustDueling
            ? td_targets_robust(batch, agent.target, cfg.gamma, cfg.delta, cfg.reg_mode)
            : td_targets_dqn(batch, agent.target, cfg.gamma);

        const ForwardPass fp = agent.net.forward(batch.states);
        Eigen::MatrixXd dq = Eigen::MatrixXd::Zero(fp.q.rows(), fp.q.cols());
        double loss = 0.0;
        for (long i = 0; i < fp.q.rows(); ++i) {
            const double resid = fp.q(i, batch.actions[i]) - y[i];
            loss += resid * resid;
            dq(i, batch.actions[i]) = 2.0 * resid * inv_batch;
        }
        loss *= inv_batch;
        if (!std::isfinite(loss))
            throw std::runtime_error("train_offline: non-finite loss at step " + std::to_string(step));
        agent.loss_trace.push_back(static_cast<float>(loss));

        Gradients g = agent.net.backward(fp, dq);
        g.clip(cfg.grad_clip);
        const double lr = cfg.initial_lr > 0.0 ? sched.step(step) : 0.0;
        agent.net.sgd_step(g, lr, cfg.momentum, &velocity);

        if ((step + 1) % cfg.target_sync_every == 0) agent.target = agent.net;
    }
    return agent;
}

double greedy_episode_return(Env& env, const TrainedAgent& agent, RandomStream& rng, double alpha) {
    EnvState state = env.reset(rng);
    double total = 0.0;
    while (!state.done) {
        const int action = agent.greedy_action(state.features);
        const StepOutcome out = env.step(action, rng);
        total += out.reward_rev + alpha * out.reward_eng;
        state = out.next_state;
    }
    return total;
}

namespace {

struct ReplayRecord {
    Eigen::VectorXd state;
    int action;
    double reward;
    Eigen::VectorXd next_state;
    bool done;
};

int greedy_from_net(const QNet& net, const Eigen::VectorXd& features) {
    const Eigen::MatrixXd q = net.q_values(features.transpose());
    int best = 0;
    for (int a = 1; a < q.cols(); ++a)
        if (q(0, a) > q(0, best)) best = a;
    return best;
}

double eval_greedy(Env& env, const QNet& net, int episodes, RandomStream& rng) {
    double total = 0.0;
    for (int e = 0; e < episodes; ++e) {
        EnvState state = env.reset(rng);
        while (!state.done) {
            const StepOutcome out = env.step(greedy_from_net(net, state.features), rng);
            total += out.reward_rev;
            state = out.next_state;
        }
    }
    return total / episodes;
}

} // namespace

QNet train_online_expert(Env& env, const OnlineDqnConfig& cfg, RandomStream& rng,
                         double* best_eval_return) {
    RandomStream init_rng = rng.split(11);
    RandomStream act_rng = rng.split(12);
    RandomStream batch_rng = rng.split(13);
    RandomStream eval_rng = rng.split(14);

    QNet net = QNet::make(env.state_dim(), cfg.hidden, env.n_actions(), HeadKind::Dueling, init_rng);
    QNet target = net;
    QNet best = net;
    double best_return = -1.0;

    std::deque<ReplayRecord> buffer;
    Gradients velocity = net.zero_gradients();
    long long env_steps = 0;
    long long next_eval = cfg.eval_every;

    while (env_steps < cfg.max_env_steps) {
        EnvState state = env.reset(act_rng);
        while (!state.done && env_steps < cfg.max_env_steps) {
            const double frac = std::min(1.0, static_cast<double>(env_steps) /
                                                  static_cast<double>(cfg.eps_decay_steps));
            const double eps = cfg.eps_start + frac * (cfg.eps_end - cfg.eps_start);
            const int action = act_rng.bernoulli(eps)
                ? act_rng.uniform_int(0, env.n_actions() - 1)
                : greedy_from_net(net, state.features);

            const StepOutcome out = env.step(action, act_rng);
            buffer.push_back({state.features, action, out.reward_rev, out.next_state.features, out.done});
            if (buffer.size() > cfg.buffer_capacity) buffer.pop_front();
            state = out.next_state;
            ++env_steps;

            if (buffer.size() >= cfg.warmup_steps) {
                const int B = cfg.batch_size;
                Eigen::MatrixXd xs(B, env.state_dim()), xn(B, env.state_dim());
                Eigen::VectorXi acts(B);
                Eigen::VectorXd rs(B), live(B);
                for (int i = 0; i < B; ++i) {
                    const auto& rec = buffer[batch_rng.index(buffer.size())];
                    xs.row(i) = rec.state.transpose();
                    xn.row(i) = rec.next_state.transpose();
                    acts[i] = rec.action;
                    rs[i] = rec.reward;
                    live[i] = rec.done ? 0.0 : 1.0;
                }
                const Eigen::VectorXd max_next = target.q_values(xn).rowwise().maxCoeff();
                const Eigen::VectorXd y = rs.array() + cfg.gamma * live.array() * max_next.array();

                const ForwardPass fp = net.forward(xs);
                Eigen::MatrixXd dq = Eigen::MatrixXd::Zero(B, env.n_actions());
                for (int i = 0; i < B; ++i)
                    dq(i, acts[i]) = 2.0 * (fp.q(i, acts[i]) - y[i]) / B;
                Gradients g = net.backward(fp, dq);
                g.clip(cfg.grad_clip);
                net.sgd_step(g, cfg.lr, cfg.momentum, &velocity);
                if (env_steps % cfg.target_sync_every == 0) target = net;
            }
        }

        if (env_steps >= next_eval || env_steps >= cfg.max_env_steps) {
            next_eval += cfg.eval_every;
            const double ret = eval_greedy(env, net, cfg.eval_episodes, eval_rng);
            if (ret > best_return) {
                best_return = ret;
                best = net;
            }
            if (best_return >= cfg.stop_reward) break;
        }
    }
    if (best_eval_return) *best_eval_return = best_return;
    return best;
}

} // namespace adrl
