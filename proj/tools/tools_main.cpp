#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "adrl/agent.hpp"
#include "adrl/cartpole.hpp"
#include "adrl/config.hpp"
#include "adrl/distill.hpp"
#include "adrl/io.hpp"
#include "adrl/pipeline.hpp"
#include "adrl/session_env.hpp"
#include "adrl/uplift.hpp"
#include "adrl/version.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 1;
constexpr int kExitRuntimeError = 2;

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct CollectArgs {
    std::string env_kind = "cartpole";
    std::uint64_t n = 100000;
    double epsilon = 0.3;
    std::uint64_t seed = 7;
    std::string out = "data.orld";
    std::string csv;
    double force_mag = 10.0;
    double pole_length = 0.5;
    double action_flip_prob = 0.0;
    double carryover_strength = 0.1;
    double drift_amplitude = 0.3;
    double episode_length_mean = 5.0;
};

int cmd_collect(const CollectArgs& args) {
    std::unique_ptr<adrl::Env> env;
    adrl::BehaviorPolicy policy;
    policy.epsilon = args.epsilon;
    adrl::QNet expert;

    if (args.env_kind == "cartpole") {
        adrl::CartPolePhysics physics;
        physics.force_mag = args.force_mag;
        physics.pole_length = args.pole_length;
        physics.action_flip_prob = args.action_flip_prob;
        env = std::make_unique<adrl::CartPoleEnv>(physics);

        adrl::RandomStream expert_rng = adrl::RandomStream(args.seed).split(100);
        adrl::OnlineDqnConfig online;
        double best = 0.0;
        adrl::CartPoleEnv nominal;
        expert = adrl::train_online_expert(nominal, online, expert_rng, &best);
        std::printf("collect: behavior policy greedy return %.1f\n", best);
        policy.greedy = [&expert](const Eigen::VectorXd& f) {
            const Eigen::MatrixXd q = expert.q_values(f.transpose());
            return q(0, 1) > q(0, 0) ? 1 : 0;
        };
    } else if (args.env_kind == "session") {
        adrl::SessionEnvConfig cfg;
        cfg.carryover_strength = args.carryover_strength;
        cfg.drift_amplitude = args.drift_amplitude;
        cfg.episode_length_mean = args.episode_length_mean;
        cfg.rng_seed = args.seed;
        env = std::make_unique<adrl::SessionEnv>(cfg);
    } else {
        throw adrl::ConfigError("collect: --env must be cartpole or session");
    }

    adrl::RandomStream rng = adrl::RandomStream(args.seed).split(200);
    const adrl::OfflineDataset ds = adrl::collect(*env, policy, args.n, rng);
    ds.save(args.out);
    std::printf("collect: wrote %zu transitions to %s\n", ds.size(), args.out.c_str());
    if (!args.csv.empty()) {
        ds.save_csv(args.csv);
        std::printf("collect: wrote CSV mirror to %s\n", args.csv.c_str());
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Offline robust RL toolkit for dynamic ad-load experiments"};
    app.set_version_flag("--version", std::string(adrl::kVersion));
    app.require_subcommand(1);

    // collect
    CollectArgs collect_args;
    auto* collect = app.add_subcommand("collect", "Collect an offline transition dataset");
    collect->add_option("--env", collect_args.env_kind, "Environment: cartpole | session");
    collect->add_option("--n", collect_args.n, "Number of transitions");
    collect->add_option("--epsilon", collect_args.epsilon, "Exploration rate of the behavior policy");
    collect->add_option("--seed", collect_args.seed, "Root seed");
    collect->add_option("--out", collect_args.out, "Output .orld path")->required();
    collect->add_option("--csv", collect_args.csv, "Optional CSV mirror path");
    collect->add_option("--force-mag", collect_args.force_mag, "CartPole force magnitude");
    collect->add_option("--pole-length", collect_args.pole_length, "CartPole half pole length");
    collect->add_option("--action-flip-prob", collect_args.action_flip_prob, "Actuator noise");
    collect->add_option("--carryover-strength", collect_args.carryover_strength,
                        "Session carryover strength");
    collect->add_option("--drift-amplitude", collect_args.drift_amplitude,
                        "Session time-of-day drift amplitude");
    collect->add_option("--episode-length-mean", collect_args.episode_length_mean,
                        "Session mean episode length");

    // train
    std::string train_data, train_variant = "dueling", train_reg = "all-but-bias",
                train_out = "agent.orlw", train_hidden = "64,64";
    double train_gamma = 0.8, train_delta = 0.0, train_alpha = 1.0, train_lr = 1e-4;
    long long train_steps = 20000;
    std::uint64_t train_seed = 1;
    int train_batch = 64, train_sync = 100;
    std::string train_mix = "scalarized";
    auto* train = app.add_subcommand("train", "Train an offline agent");
    train->add_option("--data", train_data, "Training .orld path")->required();
    train->add_option("--variant", train_variant, "dqn | dueling | robust-dueling");
    train->add_option("--gamma", train_gamma, "Discount factor");
    train->add_option("--delta", train_delta, "Robustness radius");
    train->add_option("--alpha", train_alpha, "Engagement reward weight");
    train->add_option("--reg-mode", train_reg, "last-layer | all-but-bias");
    train->add_option("--steps", train_steps, "Gradient steps");
    train->add_option("--seed", train_seed, "Training seed");
    train->add_option("--out", train_out, "Output .orlw path")->required();
    train->add_option("--hidden", train_hidden, "Hidden widths, comma separated");
    train->add_option("--batch-size", train_batch, "Minibatch size");
    train->add_option("--target-sync-every", train_sync, "Target refresh period");
    train->add_option("--lr", train_lr, "Initial learning rate");
    train->add_option("--reward-mix", train_mix, "scalarized | revenue-only | engagement-only");

    // eval-aucc
    std::string eval_agent, eval_agent_rev, eval_agent_eng, eval_data, eval_mode = "combined",
                eval_out = "curve.csv";
    double eval_alpha = 1.0;
    int eval_buckets = 100;
    auto* eval = app.add_subcommand("eval-aucc", "Cost curve and AUCC on a test dataset");
    eval->add_option("--agent", eval_agent, "Scalarized agent .orlw (combined mode)");
    eval->add_option("--agent-rev", eval_agent_rev, "Revenue agent .orlw (sensitivity mode)");
    eval->add_option("--agent-eng", eval_agent_eng, "Engagement agent .orlw (sensitivity mode)");
    eval->add_option("--data", eval_data, "Test .orld path")->required();
    eval->add_option("--mode", eval_mode, "combined | sensitivity");
    eval->add_option("--alpha", eval_alpha, "Trade-off weight");
    eval->add_option("--n-buckets", eval_buckets, "Curve resolution");
    eval->add_option("--out", eval_out, "Output curve CSV")->required();

    // sweep-perturb
    std::string sweep_agent, sweep_param = "force_mag", sweep_grid = "5,7.5,10,12.5,15",
                sweep_out = "sweep.csv";
    int sweep_episodes = 30, sweep_seeds = 30;
    std::uint64_t sweep_seed = 7;
    auto* sweep = app.add_subcommand("sweep-perturb", "Cumulative reward across a perturbation grid");
    sweep->add_option("--agent", sweep_agent, "Agent .orlw")->required();
    sweep->add_option("--param", sweep_param, "force_mag | pole_length | action_flip_prob");
    sweep->add_option("--grid", sweep_grid, "Comma-separated grid (must include nominal)");
    sweep->add_option("--episodes", sweep_episodes, "Episodes per seed");
    sweep->add_option("--seeds", sweep_seeds, "Evaluation seeds");
    sweep->add_option("--eval-seed", sweep_seed, "Root evaluation seed");
    sweep->add_option("--out", sweep_out, "Output sweep CSV")->required();

    // distill
    std::string distill_teacher, distill_data, distill_test, distill_out = "student.tree";
    int distill_depth = 8, distill_leaf = 50;
    auto* distill = app.add_subcommand("distill", "Fit a regression-tree student to teacher scores");
    distill->add_option("--teacher", distill_teacher, "Teacher agent .orlw")->required();
    distill->add_option("--data", distill_data, "Training .orld path")->required();
    distill->add_option("--test", distill_test, "Optional test .orld for the ablation report");
    distill->add_option("--depth", distill_depth, "Student max depth");
    distill->add_option("--min-samples-leaf", distill_leaf, "Student leaf size");
    distill->add_option("--out", distill_out, "Output tree path")->required();

    // verify-theory
    std::string theory_suite = "prop1", theory_out = "report.csv";
    int theory_seeds = 20;
    auto* theory = app.add_subcommand("verify-theory", "Numeric checks of the robust-MDP theory");
    theory->add_option("--suite", theory_suite, "prop1 | prop2 | fqi | thm1");
    theory->add_option("--seeds", theory_seeds, "Instances / seeds");
    theory->add_option("--out", theory_out, "Output report CSV")->required();

    // run
    std::string run_config, run_stage = "all";
    auto* run = app.add_subcommand("run", "Run pipeline stages from a config file");
    run->add_option("--config", run_config, "Config path")->required();
    run->add_option("--stage", run_stage,
                    "collect | train | eval-aucc | sweep-perturb | distill | verify-theory | all");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfigError;
    }

    try {
        if (*collect) return cmd_collect(collect_args);

        if (*train) {
            const adrl::OfflineDataset ds = adrl::OfflineDataset::load(train_data);
            adrl::AgentConfig cfg;
            cfg.gamma = train_gamma;
            cfg.delta = train_delta;
            cfg.alpha = train_alpha;
            cfg.reg_mode = adrl::parse_reg_mode(train_reg);
            cfg.train_steps = train_steps;
            cfg.seed = train_seed;
            cfg.hidden = adrl::parse_int_list(train_hidden);
            cfg.batch_size = train_batch;
            cfg.target_sync_every = train_sync;
            cfg.initial_lr = train_lr;
            if (train_mix == "scalarized") cfg.reward_mix = adrl::RewardMix::Scalarized;
            else if (train_mix == "revenue-only") cfg.reward_mix = adrl::RewardMix::RevenueOnly;
            else if (train_mix == "engagement-only") cfg.reward_mix = adrl::RewardMix::EngagementOnly;
            else throw adrl::ConfigError("train: unknown --reward-mix " + train_mix);

            const adrl::TrainedAgent agent =
                adrl::train_offline(ds, cfg, adrl::parse_variant(train_variant));
            agent.save(train_out);
            std::printf("train: %s agent saved to %s (final loss %.6g)\n",
                        adrl::variant_name(agent.variant).c_str(), train_out.c_str(),
                        agent.loss_trace.empty() ? 0.0 : agent.loss_trace.back());
            return kExitOk;
        }

        if (*eval) {
            const adrl::OfflineDataset ds = adrl::OfflineDataset::load(eval_data);
            const Eigen::MatrixXd states = adrl::states_matrix(ds);
            const adrl::ScoreMode mode = adrl::parse_score_mode(eval_mode);
            std::vector<double> scores;
            if (mode == adrl::ScoreMode::Combined) {
                if (eval_agent.empty())
                    throw adrl::ConfigError("eval-aucc: combined mode requires --agent");
                const adrl::TrainedAgent agent = adrl::TrainedAgent::load(eval_agent);
                scores = adrl::scalarized_scores(agent, states);
            } else {
                if (eval_agent_rev.empty() || eval_agent_eng.empty())
                    throw adrl::ConfigError(
                        "eval-aucc: sensitivity mode requires --agent-rev and --agent-eng");
                const adrl::TrainedAgent rev = adrl::TrainedAgent::load(eval_agent_rev);
                const adrl::TrainedAgent eng = adrl::TrainedAgent::load(eval_agent_eng);
                scores = adrl::score_units(adrl::agent_delta_pairs(rev, eng, states), mode, eval_alpha);
            }
            const adrl::CostCurve curve =
                adrl::cost_curve(adrl::units_from_dataset(ds, scores), eval_buckets);
            std::ofstream out(eval_out, std::ios::trunc);
            out << "fraction,x,y\n";
            for (const auto& p : curve.points)
                out << fmt(p.fraction) << ',' << fmt(p.x) << ',' << fmt(p.y) << '\n';
            std::printf("eval-aucc: aucc = %.6f%s\n", curve.aucc,
                        curve.exceeds_unit_range
                            ? " (interior effects exceed the full-population effect)" : "");
            for (const auto& w : curve.warnings) std::printf("eval-aucc: warning: %s\n", w.c_str());
            return kExitOk;
        }

        if (*sweep) {
            const adrl::TrainedAgent agent = adrl::TrainedAgent::load(sweep_agent);
            adrl::CartPolePhysics nominal;
            const adrl::PerturbSweepResult result = adrl::perturb_sweep(
                agent, nominal, sweep_param, adrl::parse_double_list(sweep_grid), sweep_episodes,
                sweep_seeds, sweep_seed);
            std::ofstream out(sweep_out, std::ios::trunc);
            out << "param_value,mean,std\n";
            for (std::size_t i = 0; i < result.grid.size(); ++i)
                out << fmt(result.grid[i]) << ',' << fmt(result.mean_reward[i]) << ','
                    << fmt(result.std_reward[i]) << '\n';
            std::printf("sweep-perturb: wrote %zu grid points to %s\n", result.grid.size(),
                        sweep_out.c_str());
            return kExitOk;
        }

        if (*distill) {
            const adrl::OfflineDataset train_ds = adrl::OfflineDataset::load(distill_data);
            const adrl::TrainedAgent agent = adrl::TrainedAgent::load(distill_teacher);
            adrl::TeacherModel teacher;
            teacher.scalarized = &agent;

            if (!distill_test.empty()) {
                const adrl::OfflineDataset test_ds = adrl::OfflineDataset::load(distill_test);
                adrl::DistillParams params;
                params.max_depth = distill_depth;
                params.min_samples_leaf = distill_leaf;
                const adrl::DistillReport report =
                    adrl::distill_ablation(teacher, train_ds, test_ds, params);
                report.student.save_file(distill_out);
                std::printf("distill: teacher %.4f student %.4f baseline %.4f\n",
                            report.teacher_aucc, report.student_aucc, report.baseline_aucc);
            } else {
                const Eigen::MatrixXd states = adrl::states_matrix(train_ds);
                const auto labels = adrl::make_teacher_labels(teacher, states,
                                                              adrl::ScoreMode::Combined, 1.0);
                Eigen::VectorXd y(static_cast<long>(labels.size()));
                for (std::size_t i = 0; i < labels.size(); ++i) y[static_cast<long>(i)] = labels[i];
                const adrl::RegressionTree student =
                    adrl::RegressionTree::fit(states, y, distill_depth, distill_leaf);
                student.save_file(distill_out);
                std::printf("distill: student tree with %zu leaves saved to %s\n",
                            student.n_leaves(), distill_out.c_str());
            }
            return kExitOk;
        }

        if (*theory) {
            adrl::write_theory_report(theory_suite, theory_seeds, theory_out);
            std::printf("verify-theory: %s report written to %s\n", theory_suite.c_str(),
                        theory_out.c_str());
            return kExitOk;
        }

        if (*run) {
            const adrl::ExperimentConfig cfg = adrl::ExperimentConfig::from_file(run_config);
            adrl::run_pipeline(cfg, adrl::parse_stage(run_stage));
            std::printf("run: stage %s complete, artifacts in %s\n", run_stage.c_str(),
                        cfg.run.out_dir.c_str());
            return kExitOk;
        }
    } catch (const adrl::ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConfigError;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConfigError;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitRuntimeError;
    }
    return kExitOk;
}
