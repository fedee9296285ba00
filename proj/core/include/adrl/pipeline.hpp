#pragma once

#include <string>

#include "adrl/config.hpp"

namespace adrl {

enum class Stage { Collect, Train, EvalAucc, SweepPerturb, Distill, VerifyTheory, All };

Stage parse_stage(const std::string& name);
std::string stage_name(Stage stage);

// Executes a stage (or the env-appropriate chain for All) against the config,
// writing artifacts, a resolved-config snapshot, and a manifest into
// cfg.run.out_dir. Missing upstream artifacts raise errors naming the stage
// that produces them. Reruns with identical inputs rewrite identical bytes.
void run_pipeline(const ExperimentConfig& cfg, Stage stage);

// Theory verification suites; suite is one of prop1 | prop2 | fqi | thm1.
// Writes one CSV of per-instance residuals/ratios and returns its path.
std::string write_theory_report(const std::string& suite, int seeds, const std::string& out_csv,
                                std::uint64_t root_seed = 1234);

} // namespace adrl
