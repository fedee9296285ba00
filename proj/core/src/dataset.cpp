#include "adrl/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <stdexcept>

#include "adrl/io.hpp"

namespace adrl {

namespace {
constexpr char kMagic[4] = {'O', 'R', 'L', 'D'};
constexpr std::uint32_t kVersion = 1;

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}
} // namespace

Eigen::VectorXd Normalization::apply(const Eigen::VectorXd& x) const {
    if (!fitted) return x;
    return (x - mean).cwiseQuotient(stddev);
}

Eigen::MatrixXd Normalization::apply_rows(const Eigen::MatrixXd& rows) const {
    if (!fitted) return rows;
    return (rows.rowwise() - mean.transpose()).array().rowwise() /
           stddev.transpose().array();
}

namespace {

Normalization fit_normalization(const std::vector<Transition>& ts, int state_dim) {
    Normalization norm;
    norm.mean = Eigen::VectorXd::Zero(state_dim);
    norm.stddev = Eigen::VectorXd::Ones(state_dim);
    if (ts.empty()) return norm;

    for (const auto& t : ts) norm.mean += t.state;
    norm.mean /= static_cast<double>(ts.size());

    Eigen::VectorXd sq = Eigen::VectorXd::Zero(state_dim);
    for (const auto& t : ts) sq += (t.state - norm.mean).cwiseAbs2();
    norm.stddev = (sq / static_cast<double>(ts.size())).cwiseSqrt();
    for (int i = 0; i < state_dim; ++i)
        norm.stddev[i] = std::max(norm.stddev[i], Normalization::kStdFloor);
    norm.fitted = true;
    return norm;
}

void validate_records(const std::vector<Transition>& ts, int state_dim, int n_actions) {
    std::set<std::uint64_t> closed_episodes;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        const auto& t = ts[i];
        if (t.state.size() != state_dim || t.next_state.size() != state_dim)
            throw std::invalid_argument("dataset: record state dimension mismatch");
        if (t.action >= static_cast<std::uint32_t>(n_actions))
            throw std::invalid_argument("dataset: action out of range");
        if (i > 0) {
            const auto& prev = ts[i - 1];
            if (prev.episode_id == t.episode_id) {
                if (prev.done)
                    throw std::invalid_argument("dataset: done record is not last in its episode");
            } else if (closed_episodes.count(t.episode_id)) {
                throw std::invalid_argument("dataset: episode records are not contiguous");
            }
            if (prev.episode_id != t.episode_id) closed_episodes.insert(prev.episode_id);
        }
    }
}

} // namespace

OfflineDataset OfflineDataset::from_transitions(std::vector<Transition> transitions,
                                                int state_dim, int n_actions) {
    if (state_dim <= 0 || n_actions <= 0)
        throw std::invalid_argument("dataset: state_dim and n_actions must be positive");
    validate_records(transitions, state_dim, n_actions);
    OfflineDataset ds;
    ds.transitions_ = std::move(transitions);
    ds.state_dim_ = state_dim;
    ds.n_actions_ = n_actions;
    ds.norm_ = fit_normalization(ds.transitions_, state_dim);
    return ds;
}

std::vector<std::uint64_t> OfflineDataset::episode_ids() const {
    std::vector<std::uint64_t> ids;
    for (const auto& t : transitions_)
        if (ids.empty() || ids.back() != t.episode_id) ids.push_back(t.episode_id);
    return ids;
}

OfflineDataset OfflineDataset::with_normalization(const Normalization& norm) const {
    if (norm.fitted && norm.mean.size() != state_dim_)
        throw std::invalid_argument("dataset: normalization dimension mismatch");
    OfflineDataset copy = *this;
    copy.norm_ = norm;
    return copy;
}

OfflineDataset OfflineDataset::with_features_dropped(const std::vector<int>& feature_indices) const {
    std::vector<bool> drop(state_dim_, false);
    for (int idx : feature_indices) {
        if (idx < 0 || idx >= state_dim_)
            throw std::invalid_argument("dataset: feature index out of range");
        drop[idx] = true;
    }
    const int kept = state_dim_ - static_cast<int>(feature_indices.size());
    if (kept <= 0) throw std::invalid_argument("dataset: cannot drop every feature");

    std::vector<Transition> reduced = transitions_;
    for (auto& t : reduced) {
        Eigen::VectorXd s(kept), ns(kept);
        for (int i = 0, j = 0; i < state_dim_; ++i) {
            if (drop[i]) continue;
            s[j] = t.state[i];
            ns[j] = t.next_state[i];
            ++j;
        }
        t.state = std::move(s);
        t.next_state = std::move(ns);
    }
    return from_transitions(std::move(reduced), kept, n_actions_);
}

void OfflineDataset::save(const std::string& path) const {
    auto out = io::open_write(path);
    out.write(kMagic, 4);
    io::write_scalar<std::uint32_t>(out, kVersion);
    io::write_scalar<std::uint32_t>(out, static_cast<std::uint32_t>(state_dim_));
    io::write_scalar<std::uint32_t>(out, static_cast<std::uint32_t>(n_actions_));
    io::write_scalar<std::uint64_t>(out, transitions_.size());
    for (const auto& t : transitions_) {
        io::write_scalar<std::uint64_t>(out, t.episode_id);
        io::write_scalar<std::uint32_t>(out, t.step_index);
        for (int i = 0; i < state_dim_; ++i) io::write_scalar<double>(out, t.state[i]);
        io::write_scalar<std::uint32_t>(out, t.action);
        io::write_scalar<double>(out, t.reward_rev);
        io::write_scalar<double>(out, t.reward_eng);
        for (int i = 0; i < state_dim_; ++i) io::write_scalar<double>(out, t.next_state[i]);
        io::write_scalar<std::uint8_t>(out, t.done ? 1 : 0);
        io::write_scalar<std::uint32_t>(out, t.time_bucket);
    }
    if (!out) throw std::runtime_error("dataset: write failed: " + path);
}

OfflineDataset OfflineDataset::load(const std::string& path) {
    auto in = io::open_read(path);
    char magic[4];
    in.read(magic, 4);
    if (!in || !std::equal(magic, magic + 4, kMagic))
        throw std::runtime_error("dataset: bad magic in " + path);
    const auto version = io::read_scalar<std::uint32_t>(in);
    if (version != kVersion) throw std::runtime_error("dataset: unsupported version");
    const int state_dim = static_cast<int>(io::read_scalar<std::uint32_t>(in));
    const int n_actions = static_cast<int>(io::read_scalar<std::uint32_t>(in));
    const auto n_records = io::read_scalar<std::uint64_t>(in);

    std::vector<Transition> ts(n_records);
    for (auto& t : ts) {
        t.episode_id = io::read_scalar<std::uint64_t>(in);
        t.step_index = io::read_scalar<std::uint32_t>(in);
        t.state.resize(state_dim);
        for (int i = 0; i < state_dim; ++i) t.state[i] = io::read_scalar<double>(in);
        t.action = io::read_scalar<std::uint32_t>(in);
        t.reward_rev = io::read_scalar<double>(in);
        t.reward_eng = io::read_scalar<double>(in);
        t.next_state.resize(state_dim);
        for (int i = 0; i < state_dim; ++i) t.next_state[i] = io::read_scalar<double>(in);
        t.done = io::read_scalar<std::uint8_t>(in) != 0;
        t.time_bucket = io::read_scalar<std::uint32_t>(in);
    }
    return from_transitions(std::move(ts), state_dim, n_actions);
}

void OfflineDataset::save_csv(const std::string& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("dataset: cannot open for writing: " + path);
    out << "episode_id,step_index";
    for (int i = 0; i < state_dim_; ++i) out << ",s" << i;
    out << ",action,reward_rev,reward_eng";
    for (int i = 0; i < state_dim_; ++i) out << ",ns" << i;
    out << ",done,time_bucket\n";
    for (const auto& t : transitions_) {
        out << t.episode_id << ',' << t.step_index;
        for (int i = 0; i < state_dim_; ++i) out << ',' << fmt_double(t.state[i]);
        out << ',' << t.action << ',' << fmt_double(t.reward_rev) << ',' << fmt_double(t.reward_eng);
        for (int i = 0; i < state_dim_; ++i) out << ',' << fmt_double(t.next_state[i]);
        out << ',' << (t.done ? 1 : 0) << ',' << t.time_bucket << '\n';
    }
}

int BehaviorPolicy::act(const Eigen::VectorXd& features, int n_actions, RandomStream& rng) const {
    if (!greedy) return rng.uniform_int(0, n_actions - 1);
    if (rng.bernoulli(epsilon)) return rng.uniform_int(0, n_actions - 1);
    return greedy(features);
}

OfflineDataset collect(Env& env, const BehaviorPolicy& policy, std::size_t n_samples,
                       RandomStream& rng) {
    if (n_samples < 1) throw std::invalid_argument("collect: n_samples must be >= 1");
    if (policy.epsilon < 0.0 || policy.epsilon > 1.0)
        throw std::invalid_argument("collect: epsilon must be in [0,1]");

    std::vector<Transition> ts;
    ts.reserve(n_samples);
    std::uint64_t episode = 0;
    try {
        while (ts.size() < n_samples) {
            EnvState state = env.reset(rng);
            std::uint32_t step = 0;
            bool done = false;
            while (!done && ts.size() < n_samples) {
                const int action = policy.act(state.features, env.n_actions(), rng);
                StepOutcome out = env.step(action, rng);
                Transition t;
                t.episode_id = episode;
                t.step_index = step++;
                t.state = state.features;
                t.action = static_cast<std::uint32_t>(action);
                t.reward_rev = out.reward_rev;
                t.reward_eng = out.reward_eng;
                t.next_state = out.next_state.features;
                t.done = out.done;
                t.time_bucket = static_cast<std::uint32_t>(env.time_bucket());
                ts.push_back(std::move(t));
                state = out.next_state;
                done = out.done;
            }
            ++episode;
        }
    } catch (const std::exception& e) {
        throw std::runtime_error("collect: environment failed after " +
                                 std::to_string(ts.size()) + " transitions: " + e.what());
    }
    return OfflineDataset::from_transitions(std::move(ts), env.state_dim(), env.n_actions());
}

namespace {

std::pair<OfflineDataset, OfflineDataset> assemble_split(const OfflineDataset& ds,
                                                         std::vector<Transition> train,
                                                         std::vector<Transition> test) {
    auto train_ds = OfflineDataset::from_transitions(std::move(train), ds.state_dim(), ds.n_actions());
    // Normalization comes from the training portion only and is shared with test.
    auto test_ds = OfflineDataset::from_transitions(std::move(test), ds.state_dim(), ds.n_actions())
                       .with_normalization(train_ds.normalization());
    return {std::move(train_ds), std::move(test_ds)};
}

} // namespace

std::pair<OfflineDataset, OfflineDataset> split_by_time(const OfflineDataset& ds, int cut_bucket) {
    std::vector<Transition> train, test;
    for (const auto& t : ds.transitions()) {
        if (static_cast<int>(t.time_bucket) < cut_bucket) train.push_back(t);
        else test.push_back(t);
    }
    if (train.empty() || test.empty())
        throw std::invalid_argument("split_by_time: one side of the split is empty");
    auto result = assemble_split(ds, std::move(train), std::move(test));
    return result;
}

std::pair<OfflineDataset, OfflineDataset> split_random(const OfflineDataset& ds,
                                                       double train_fraction, RandomStream& rng) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw std::invalid_argument("split_random: train_fraction must be in (0,1)");
    auto episodes = ds.episode_ids();
    std::shuffle(episodes.begin(), episodes.end(), rng.engine());
    const std::size_t n_train = static_cast<std::size_t>(
        std::floor(train_fraction * static_cast<double>(episodes.size())));
    std::set<std::uint64_t> train_set(episodes.begin(), episodes.begin() + n_train);

    std::vector<Transition> train, test;
    for (const auto& t : ds.transitions()) {
        if (train_set.count(t.episode_id)) train.push_back(t);
        else test.push_back(t);
    }
    if (train.empty() || test.empty())
        throw std::invalid_argument("split_random: one side of the split is empty");
    return assemble_split(ds, std::move(train), std::move(test));
}

std::vector<std::size_t> sample_batch(const OfflineDataset& ds, std::size_t batch_size,
                                      RandomStream& rng) {
    if (batch_size > ds.size())
        throw std::invalid_argument("sample_batch: batch_size exceeds dataset size");
    std::vector<std::size_t> idx(batch_size);
    for (auto& i : idx) i = rng.index(ds.size());
    return idx;
}

} // namespace adrl
