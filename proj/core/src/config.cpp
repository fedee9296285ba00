#include "adrl/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace adrl {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing");
        return x;
    } catch (...) {
        throw ConfigError("config: bad numeric value for " + key + ": '" + v + "'");
    }
}

long long to_int(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const long long x = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing");
        return x;
    } catch (...) {
        throw ConfigError("config: bad integer value for " + key + ": '" + v + "'");
    }
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
    const long long x = to_int(key, v);
    if (x < 0) throw ConfigError("config: " + key + " must be non-negative");
    return static_cast<std::uint64_t>(x);
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

std::vector<double> parse_double_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) throw ConfigError("config: empty list element in '" + text + "'");
        out.push_back(to_double("list", item));
    }
    if (out.empty()) throw ConfigError("config: empty list");
    return out;
}

std::vector<int> parse_int_list(const std::string& text) {
    std::vector<int> out;
    for (double v : parse_double_list(text)) out.push_back(static_cast<int>(v));
    return out;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_string(buf.str());
}

ExperimentConfig ExperimentConfig::from_string(const std::string& text) {
    ExperimentConfig cfg;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;

    while (std::getline(in, line)) {
        ++lineno;
        const auto comment = line.find_first_of("#;");
        if (comment != std::string::npos) line = line.substr(0, comment);
        line = trim(line);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("config: malformed section at line " + std::to_string(lineno));
            section = trim(line.substr(1, line.size() - 2));
            if (section != "env" && section != "dataset" && section != "agent" &&
                section != "eval" && section != "distill" && section != "theory" &&
                section != "run")
                throw ConfigError("config: unknown section [" + section + "]");
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: expected 'key = value' at line " + std::to_string(lineno));
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (section.empty())
            throw ConfigError("config: key '" + key + "' outside any section");
        const std::string qk = section + "." + key;

        if (section == "env") {
            if (key == "kind") cfg.env.kind = value;
            else if (key == "force_mag") cfg.env.force_mag = to_double(qk, value);
            else if (key == "pole_length") cfg.env.pole_length = to_double(qk, value);
            else if (key == "action_flip_prob") cfg.env.action_flip_prob = to_double(qk, value);
            else if (key == "carryover_strength") cfg.env.carryover_strength = to_double(qk, value);
            else if (key == "drift_amplitude") cfg.env.drift_amplitude = to_double(qk, value);
            else if (key == "episode_length_mean") cfg.env.episode_length_mean = to_double(qk, value);
            else if (key == "seed") cfg.env.seed = to_u64(qk, value);
            else throw ConfigError("config: unknown key " + qk);
        } else if (section == "dataset") {
            if (key == "n") cfg.dataset.n = to_u64(qk, value);
            else if (key == "epsilon") cfg.dataset.epsilon = to_double(qk, value);
            else if (key == "split") cfg.dataset.split = value;
            else if (key == "train_fraction") cfg.dataset.train_fraction = to_double(qk, value);
            else if (key == "cut_bucket") cfg.dataset.cut_bucket = static_cast<int>(to_int(qk, value));
            else throw ConfigError("config: unknown key " + qk);
        } else if (section == "agent") {
            if (key == "variant") cfg.agent.variant = value;
            else if (key == "gamma") cfg.agent.gamma = to_double(qk, value);
            else if (key == "delta") cfg.agent.delta = to_double(qk, value);
            else if (key == "alpha") cfg.agent.alpha = to_double(qk, value);
            else if (key == "reg_mode") cfg.agent.reg_mode = value;
            else if (key == "steps") cfg.agent.steps = to_int(qk, value);
            else if (key == "seed") cfg.agent.seed = to_u64(qk, value);
            else if (key == "hidden") cfg.agent.hidden = parse_int_list(value);
            else if (key == "batch_size") cfg.agent.batch_size = static_cast<int>(to_int(qk, value));
            else if (key == "target_sync_every")
                cfg.agent.target_sync_every = static_cast<int>(to_int(qk, value));
            else if (key == "initial_lr") cfg.agent.initial_lr = to_double(qk, value);
            else throw ConfigError("config: unknown key " + qk);
        } else if (section == "eval") {
            if (key == "mode") cfg.eval.mode = value;
            else if (key == "n_buckets") cfg.eval.n_buckets = static_cast<int>(to_int(qk, value));
            else if (key == "alpha") cfg.eval.alpha = to_double(qk, value);
            else if (key == "sweep_param") cfg.eval.sweep_param = value;
            else if (key == "sweep_grid") cfg.eval.sweep_grid = parse_double_list(value);
            else if (key == "episodes") cfg.eval.episodes = static_cast<int>(to_int(qk, value));
            else if (key == "seeds") cfg.eval.seeds = static_cast<int>(to_int(qk, value));
            else throw ConfigError("config: unknown key " + qk);
        } else if (section == "distill") {
            if (key == "depth") cfg.distill.depth = static_cast<int>(to_int(qk, value));
            else if (key == "min_samples_leaf")
                cfg.distill.min_samples_leaf = static_cast<int>(to_int(qk, value));
            else throw ConfigError("config: unknown key " + qk);
        } else if (section == "theory") {
            if (key == "seeds") cfg.theory.seeds = static_cast<int>(to_int(qk, value));
            else throw ConfigError("config: unknown key " + qk);
        } else { // run
            if (key == "out_dir") cfg.run.out_dir = value;
            else throw ConfigError("config: unknown key " + qk);
        }
    }
    cfg.validate();
    return cfg;
}

void ExperimentConfig::validate() const {
    if (env.kind != "cartpole" && env.kind != "session")
        throw ConfigError("config: env.kind must be cartpole or session");
    if (env.force_mag <= 0.0) throw ConfigError("config: env.force_mag must be > 0");
    if (env.pole_length <= 0.0) throw ConfigError("config: env.pole_length must be > 0");
    if (env.action_flip_prob < 0.0 || env.action_flip_prob > 1.0)
        throw ConfigError("config: env.action_flip_prob must be in [0,1]");
    if (env.carryover_strength < 0.0)
        throw ConfigError("config: env.carryover_strength must be >= 0");
    if (env.drift_amplitude < 0.0) throw ConfigError("config: env.drift_amplitude must be >= 0");
    if (env.episode_length_mean <= 0.0)
        throw ConfigError("config: env.episode_length_mean must be > 0");

    if (dataset.n < 1) throw ConfigError("config: dataset.n must be >= 1");
    if (dataset.epsilon < 0.0 || dataset.epsilon > 1.0)
        throw ConfigError("config: dataset.epsilon must be in [0,1]");
    if (dataset.split != "random" && dataset.split != "time")
        throw ConfigError("config: dataset.split must be random or time");
    if (dataset.train_fraction <= 0.0 || dataset.train_fraction >= 1.0)
        throw ConfigError("config: dataset.train_fraction must be in (0,1)");

    if (agent.variant != "dqn" && agent.variant != "dueling" && agent.variant != "robust-dueling")
        throw ConfigError("config: agent.variant must be dqn, dueling, or robust-dueling");
    if (agent.gamma < 0.0 || agent.gamma >= 1.0)
        throw ConfigError("config: agent.gamma must be in [0,1)");
    if (agent.delta < 0.0) throw ConfigError("config: agent.delta must be >= 0");
    if (agent.alpha <= 0.0) throw ConfigError("config: agent.alpha must be > 0");
    if (agent.reg_mode != "last-layer" && agent.reg_mode != "all-but-bias")
        throw ConfigError("config: agent.reg_mode must be last-layer or all-but-bias");
    if (agent.steps < 0) throw ConfigError("config: agent.steps must be >= 0");
    if (agent.batch_size < 1) throw ConfigError("config: agent.batch_size must be >= 1");
    if (agent.target_sync_every < 1)
        throw ConfigError("config: agent.target_sync_every must be >= 1");
    if (agent.initial_lr < 0.0) throw ConfigError("config: agent.initial_lr must be >= 0");
    for (int h : agent.hidden)
        if (h < 1) throw ConfigError("config: agent.hidden widths must be >= 1");

    if (eval.mode != "combined" && eval.mode != "sensitivity")
        throw ConfigError("config: eval.mode must be combined or sensitivity");
    if (eval.n_buckets < 1) throw ConfigError("config: eval.n_buckets must be >= 1");
    if (eval.alpha <= 0.0) throw ConfigError("config: eval.alpha must be > 0");
    if (eval.sweep_param != "force_mag" && eval.sweep_param != "pole_length" &&
        eval.sweep_param != "action_flip_prob")
        throw ConfigError("config: eval.sweep_param must be force_mag, pole_length, or action_flip_prob");
    if (eval.episodes < 1 || eval.seeds < 1)
        throw ConfigError("config: eval.episodes and eval.seeds must be >= 1");

    if (distill.depth < 0) throw ConfigError("config: distill.depth must be >= 0");
    if (distill.min_samples_leaf < 1)
        throw ConfigError("config: distill.min_samples_leaf must be >= 1");
    if (theory.seeds < 1) throw ConfigError("config: theory.seeds must be >= 1");
    if (run.out_dir.empty()) throw ConfigError("config: run.out_dir must not be empty");
}

std::string ExperimentConfig::resolved_text() const {
    std::ostringstream out;
    out << "[env]\n";
    out << "kind = " << env.kind << "\n";
    out << "force_mag = " << fmt(env.force_mag) << "\n";
    out << "pole_length = " << fmt(env.pole_length) << "\n";
    out << "action_flip_prob = " << fmt(env.action_flip_prob) << "\n";
    out << "carryover_strength = " << fmt(env.carryover_strength) << "\n";
    out << "drift_amplitude = " << fmt(env.drift_amplitude) << "\n";
    out << "episode_length_mean = " << fmt(env.episode_length_mean) << "\n";
    out << "seed = " << env.seed << "\n";
    out << "\n[dataset]\n";
    out << "n = " << dataset.n << "\n";
    out << "epsilon = " << fmt(dataset.epsilon) << "\n";
    out << "split = " << dataset.split << "\n";
    out << "train_fraction = " << fmt(dataset.train_fraction) << "\n";
    out << "cut_bucket = " << dataset.cut_bucket << "\n";
    out << "\n[agent]\n";
    out << "variant = " << agent.variant << "\n";
    out << "gamma = " << fmt(agent.gamma) << "\n";
    out << "delta = " << fmt(agent.delta) << "\n";
    out << "alpha = " << fmt(agent.alpha) << "\n";
    out << "reg_mode = " << agent.reg_mode << "\n";
    out << "steps = " << agent.steps << "\n";
    out << "seed = " << agent.seed << "\n";
    out << "hidden = ";
    for (std::size_t i = 0; i < agent.hidden.size(); ++i)
        out << (i ? "," : "") << agent.hidden[i];
    out << "\n";
    out << "batch_size = " << agent.batch_size << "\n";
    out << "target_sync_every = " << agent.target_sync_every << "\n";
    out << "initial_lr = " << fmt(agent.initial_lr) << "\n";
    out << "\n[eval]\n";
    out << "mode = " << eval.mode << "\n";
    out << "n_buckets = " << eval.n_buckets << "\n";
    out << "alpha = " << fmt(eval.alpha) << "\n";
    out << "sweep_param = " << eval.sweep_param << "\n";
    out << "sweep_grid = ";
    for (std::size_t i = 0; i < eval.sweep_grid.size(); ++i)
        out << (i ? "," : "") << fmt(eval.sweep_grid[i]);
    out << "\n";
    out << "episodes = " << eval.episodes << "\n";
    out << "seeds = " << eval.seeds << "\n";
    out << "\n[distill]\n";
    out << "depth = " << distill.depth << "\n";
    out << "min_samples_leaf = " << distill.min_samples_leaf << "\n";
    out << "\n[theory]\n";
    out << "seeds = " << theory.seeds << "\n";
    out << "\n[run]\n";
    out << "out_dir = " << run.out_dir << "\n";
    return out.str();
}

} // namespace adrl
