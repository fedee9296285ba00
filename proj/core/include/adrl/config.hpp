#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace adrl {

// Raised for malformed or invalid configuration; the CLI maps it to exit code 1.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Flat-sectioned key-value text:
//   [section]
//   key = value        # comment
// Unknown sections and keys are rejected at load.
struct EnvSection {
    std::string kind = "cartpole"; // cartpole | session
    double force_mag = 10.0;
    double pole_length = 0.5;
    double action_flip_prob = 0.0;
    double carryover_strength = 0.1;
    double drift_amplitude = 0.3;
    double episode_length_mean = 5.0;
    std::uint64_t seed = 7;
};

struct DatasetSection {
    std::uint64_t n = 100000;
    double epsilon = 0.3;
    std::string split = "random"; // random | time
    double train_fraction = 0.7;
    int cut_bucket = 12;
};

struct AgentSection {
    std::string variant = "dueling";
    double gamma = 0.8;
    double delta = 0.0;
    double alpha = 1.0;
    std::string reg_mode = "all-but-bias";
    long long steps = 20000;
    std::uint64_t seed = 1;
    std::vector<int> hidden = {64, 64};
    int batch_size = 64;
    int target_sync_every = 100;
    double initial_lr = 1e-4;
};

struct EvalSection {
    std::string mode = "combined"; // combined | sensitivity
    int n_buckets = 100;
    double alpha = 1.0;
    std::string sweep_param = "force_mag";
    std::vector<double> sweep_grid = {5.0, 7.5, 10.0, 12.5, 15.0};
    int episodes = 30;
    int seeds = 30;
};

struct DistillSection {
    int depth = 8;
    int min_samples_leaf = 50;
};

struct TheorySection {
    int seeds = 20;
};

struct RunSection {
    std::string out_dir = "runs/out";
};

struct ExperimentConfig {
    EnvSection env;
    DatasetSection dataset;
    AgentSection agent;
    EvalSection eval;
    DistillSection distill;
    TheorySection theory;
    RunSection run;

    static ExperimentConfig from_file(const std::string& path);
    static ExperimentConfig from_string(const std::string& text);

    void validate() const;

    // Full config with every default resolved, parseable by from_string.
    std::string resolved_text() const;
};

std::vector<double> parse_double_list(const std::string& text);
std::vector<int> parse_int_list(const std::string& text);

} // namespace adrl
