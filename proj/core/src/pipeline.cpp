#include "adrl/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>

#include "adrl/agent.hpp"
#include "adrl/cartpole.hpp"
#include "adrl/distill.hpp"
#include "adrl/io.hpp"
#include "adrl/robust_linear.hpp"
#include "adrl/session_env.hpp"
#include "adrl/uplift.hpp"
#include "adrl/version.hpp"

namespace fs = std::filesystem;

namespace adrl {

Stage parse_stage(const std::string& name) {
    if (name == "collect") return Stage::Collect;
    if (name == "train") return Stage::Train;
    if (name == "eval-aucc") return Stage::EvalAucc;
    if (name == "sweep-perturb") return Stage::SweepPerturb;
    if (name == "distill") return Stage::Distill;
    if (name == "verify-theory") return Stage::VerifyTheory;
    if (name == "all") return Stage::All;
    throw ConfigError("unknown stage: " + name);
}

std::string stage_name(Stage stage) {
    switch (stage) {
        case Stage::Collect: return "collect";
        case Stage::Train: return "train";
        case Stage::EvalAucc: return "eval-aucc";
        case Stage::SweepPerturb: return "sweep-perturb";
        case Stage::Distill: return "distill";
        case Stage::VerifyTheory: return "verify-theory";
        default: return "all";
    }
}

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string hex64(std::uint64_t v) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "0x%016llx", static_cast<unsigned long long>(v));
    return buf;
}

struct PipelineContext {
    const ExperimentConfig& cfg;
    fs::path out;

    fs::path path(const std::string& name) const { return out / name; }

    void require(const std::string& artifact, const std::string& producing_stage) const {
        if (!fs::exists(path(artifact)))
            throw std::runtime_error("missing artifact '" + artifact + "' in " + out.string() +
                                     "; run stage '" + producing_stage + "' first");
    }

    // The manifest lists the resolved config hash, the root seed, and a hash
    // of every artifact currently present, in a fixed order.
    void write_manifest() const {
        static const char* kArtifacts[] = {
            "resolved.cfg", "data.orld",    "train.orld",         "test.orld",
            "agent.orlw",   "agent_rev.orlw", "agent_eng.orlw",   "curve.csv",
            "sweep.csv",    "student.tree", "distill_report.csv", "theory_prop1.csv",
            "theory_prop2.csv", "theory_fqi.csv", "theory_thm1.csv"};
        std::ofstream man(path("manifest.txt"), std::ios::trunc);
        man << "adrl_version = " << kVersion << "\n";
        man << "root_seed = " << cfg.env.seed << "\n";
        for (const char* name : kArtifacts) {
            const fs::path p = path(name);
            if (fs::exists(p))
                man << "artifact " << name << " fnv1a = " << hex64(io::fnv1a_file(p.string())) << "\n";
        }
    }
};

std::unique_ptr<Env> make_env(const EnvSection& env) {
    if (env.kind == "cartpole") {
        CartPolePhysics physics;
        physics.force_mag = env.force_mag;
        physics.pole_length = env.pole_length;
        physics.action_flip_prob = env.action_flip_prob;
        return std::make_unique<CartPoleEnv>(physics);
    }
    SessionEnvConfig cfg;
    cfg.carryover_strength = env.carryover_strength;
    cfg.drift_amplitude = env.drift_amplitude;
    cfg.episode_length_mean = env.episode_length_mean;
    cfg.rng_seed = env.seed;
    return std::make_unique<SessionEnv>(cfg);
}

AgentConfig agent_config(const ExperimentConfig& cfg) {
    AgentConfig ac;
    ac.gamma = cfg.agent.gamma;
    ac.delta = cfg.agent.delta;
    ac.alpha = cfg.agent.alpha;
    ac.reg_mode = parse_reg_mode(cfg.agent.reg_mode);
    ac.train_steps = cfg.agent.steps;
    ac.seed = cfg.agent.seed;
    ac.hidden = cfg.agent.hidden;
    ac.batch_size = cfg.agent.batch_size;
    ac.target_sync_every = cfg.agent.target_sync_every;
    ac.initial_lr = cfg.agent.initial_lr;
    return ac;
}

void stage_collect(const PipelineContext& ctx) {
    const auto& cfg = ctx.cfg;
    auto env = make_env(cfg.env);

    BehaviorPolicy policy;
    policy.epsilon = cfg.dataset.epsilon;
    QNet expert;
    if (cfg.env.kind == "cartpole") {
        // Behavior policy: a competent online-trained net wrapped epsilon-greedy.
        RandomStream expert_rng = RandomStream(cfg.env.seed).split(100);
        OnlineDqnConfig online;
        double best = 0.0;
        CartPoleEnv nominal_env; // experts train at nominal physics
        expert = train_online_expert(nominal_env, online, expert_rng, &best);
        if (best < 400.0)
            throw std::runtime_error("collect: behavior-policy training plateaued at " +
                                     std::to_string(best));
        policy.greedy = [&expert](const Eigen::VectorXd& f) {
            const Eigen::MatrixXd q = expert.q_values(f.transpose());
            int a = 0;
            for (int j = 1; j < q.cols(); ++j)
                if (q(0, j) > q(0, a)) a = j;
            return a;
        };
    }

    RandomStream collect_rng = RandomStream(cfg.env.seed).split(200);
    const OfflineDataset ds = collect(*env, policy, cfg.dataset.n, collect_rng);
    ds.save(ctx.path("data.orld").string());

    if (cfg.dataset.split == "time") {
        auto [train, test] = split_by_time(ds, cfg.dataset.cut_bucket);
        train.save(ctx.path("train.orld").string());
        test.save(ctx.path("test.orld").string());
    } else {
        RandomStream split_rng = RandomStream(cfg.env.seed).split(300);
        auto [train, test] = split_random(ds, cfg.dataset.train_fraction, split_rng);
        train.save(ctx.path("train.orld").string());
        test.save(ctx.path("test.orld").string());
    }
}

void stage_train(const PipelineContext& ctx) {
    ctx.require("train.orld", "collect");
    const OfflineDataset train = OfflineDataset::load(ctx.path("train.orld").string());
    AgentConfig ac = agent_config(ctx.cfg);
    const Variant variant = parse_variant(ctx.cfg.agent.variant);

    const TrainedAgent agent = train_offline(train, ac, variant);
    agent.save(ctx.path("agent.orlw").string());

    if (ctx.cfg.eval.mode == "sensitivity") {
        // Sensitivity ranking needs separate revenue and engagement effects.
        AgentConfig rev_cfg = ac;
        rev_cfg.reward_mix = RewardMix::RevenueOnly;
        rev_cfg.seed = ac.seed + 1;
        train_offline(train, rev_cfg, variant).save(ctx.path("agent_rev.orlw").string());
        AgentConfig eng_cfg = ac;
        eng_cfg.reward_mix = RewardMix::EngagementOnly;
        eng_cfg.seed = ac.seed + 2;
        train_offline(train, eng_cfg, variant).save(ctx.path("agent_eng.orlw").string());
    }
}

void stage_eval_aucc(const PipelineContext& ctx) {
    ctx.require("test.orld", "collect");
    ctx.require("agent.orlw", "train");
    const OfflineDataset test = OfflineDataset::load(ctx.path("test.orld").string());
    const Eigen::MatrixXd states = states_matrix(test);
    const ScoreMode mode = parse_score_mode(ctx.cfg.eval.mode);

    std::vector<double> scores;
    if (mode == ScoreMode::Combined) {
        const TrainedAgent agent = TrainedAgent::load(ctx.path("agent.orlw").string());
        scores = scalarized_scores(agent, states);
    } else {
        ctx.require("agent_rev.orlw", "train");
        ctx.require("agent_eng.orlw", "train");
        const TrainedAgent rev = TrainedAgent::load(ctx.path("agent_rev.orlw").string());
        const TrainedAgent eng = TrainedAgent::load(ctx.path("agent_eng.orlw").string());
        scores = score_units(agent_delta_pairs(rev, eng, states), mode, ctx.cfg.eval.alpha);
    }

    const CostCurve curve = cost_curve(units_from_dataset(test, scores), ctx.cfg.eval.n_buckets);
    std::ofstream out(ctx.path("curve.csv"), std::ios::trunc);
    out << "fraction,x,y\n";
    for (const auto& p : curve.points)
        out << fmt(p.fraction) << ',' << fmt(p.x) << ',' << fmt(p.y) << '\n';

    std::printf("eval-aucc: aucc = %.6f over %d buckets%s\n", curve.aucc, ctx.cfg.eval.n_buckets,
                curve.exceeds_unit_range ? " (interior effects exceed the full-population effect)"
                                         : "");
    for (const auto& w : curve.warnings) std::printf("eval-aucc: warning: %s\n", w.c_str());
}

void stage_sweep(const PipelineContext& ctx) {
    if (ctx.cfg.env.kind != "cartpole")
        throw ConfigError("sweep-perturb requires env.kind = cartpole");
    ctx.require("agent.orlw", "train");
    const TrainedAgent agent = TrainedAgent::load(ctx.path("agent.orlw").string());

    CartPolePhysics nominal;
    nominal.force_mag = ctx.cfg.env.force_mag;
    nominal.pole_length = ctx.cfg.env.pole_length;
    nominal.action_flip_prob = ctx.cfg.env.action_flip_prob;

    const std::uint64_t eval_seed = RandomStream(ctx.cfg.env.seed).split(400).seed();
    const PerturbSweepResult sweep =
        perturb_sweep(agent, nominal, ctx.cfg.eval.sweep_param, ctx.cfg.eval.sweep_grid,
                      ctx.cfg.eval.episodes, ctx.cfg.eval.seeds, eval_seed);

    std::ofstream out(ctx.path("sweep.csv"), std::ios::trunc);
    out << "param_value,mean,std\n";
    for (std::size_t i = 0; i < sweep.grid.size(); ++i)
        out << fmt(sweep.grid[i]) << ',' << fmt(sweep.mean_reward[i]) << ','
            << fmt(sweep.std_reward[i]) << '\n';
}

void stage_distill(const PipelineContext& ctx) {
    ctx.require("train.orld", "collect");
    ctx.require("test.orld", "collect");
    ctx.require("agent.orlw", "train");
    const OfflineDataset train = OfflineDataset::load(ctx.path("train.orld").string());
    const OfflineDataset test = OfflineDataset::load(ctx.path("test.orld").string());

    DistillParams params;
    params.max_depth = ctx.cfg.distill.depth;
    params.min_samples_leaf = ctx.cfg.distill.min_samples_leaf;
    params.mode = parse_score_mode(ctx.cfg.eval.mode);
    params.alpha = ctx.cfg.eval.alpha;
    params.n_buckets = ctx.cfg.eval.n_buckets;

    TeacherModel teacher;
    TrainedAgent scalarized, rev, eng;
    if (params.mode == ScoreMode::Sensitivity) {
        ctx.require("agent_rev.orlw", "train");
        ctx.require("agent_eng.orlw", "train");
        rev = TrainedAgent::load(ctx.path("agent_rev.orlw").string());
        eng = TrainedAgent::load(ctx.path("agent_eng.orlw").string());
        teacher.revenue = &rev;
        teacher.engagement = &eng;
    } else {
        scalarized = TrainedAgent::load(ctx.path("agent.orlw").string());
        teacher.scalarized = &scalarized;
    }

    const DistillReport report = distill_ablation(teacher, train, test, params);
    report.student.save_file(ctx.path("student.tree").string());

    std::ofstream out(ctx.path("distill_report.csv"), std::ios::trunc);
    out << "model,test_aucc\n";
    out << "teacher," << fmt(report.teacher_aucc) << '\n';
    out << "student_with_teacher," << fmt(report.student_aucc) << '\n';
    out << "student_without_teacher," << fmt(report.baseline_aucc) << '\n';
    std::printf("distill: teacher %.4f student %.4f baseline %.4f\n", report.teacher_aucc,
                report.student_aucc, report.baseline_aucc);
}

void stage_verify_theory(const PipelineContext& ctx) {
    for (const char* suite : {"prop1", "prop2", "fqi", "thm1"})
        write_theory_report(suite, ctx.cfg.theory.seeds,
                            ctx.path(std::string("theory_") + suite + ".csv").string());
}

} // namespace

void run_pipeline(const ExperimentConfig& cfg, Stage stage) {
    cfg.validate();
    PipelineContext ctx{cfg, fs::path(cfg.run.out_dir)};
    fs::create_directories(ctx.out);

    {
        std::ofstream resolved(ctx.path("resolved.cfg"), std::ios::trunc);
        resolved << cfg.resolved_text();
    }

    std::vector<Stage> stages;
    if (stage == Stage::All) {
        stages.push_back(Stage::Collect);
        stages.push_back(Stage::Train);
        if (cfg.env.kind == "session") {
            stages.push_back(Stage::EvalAucc);
            stages.push_back(Stage::Distill);
        } else {
            stages.push_back(Stage::SweepPerturb);
        }
    } else {
        stages.push_back(stage);
    }

    for (Stage s : stages) {
        switch (s) {
            case Stage::Collect: stage_collect(ctx); break;
            case Stage::Train: stage_train(ctx); break;
            case Stage::EvalAucc: stage_eval_aucc(ctx); break;
            case Stage::SweepPerturb: stage_sweep(ctx); break;
            case Stage::Distill: stage_distill(ctx); break;
            case Stage::VerifyTheory: stage_verify_theory(ctx); break;
            case Stage::All: break;
        }
        ctx.write_manifest();
    }
}

std::string write_theory_report(const std::string& suite, int seeds, const std::string& out_csv,
                                std::uint64_t root_seed) {
    if (seeds < 1) throw ConfigError("verify-theory: seeds must be >= 1");
    std::ofstream out(out_csv, std::ios::trunc);
    if (!out) throw std::runtime_error("verify-theory: cannot open " + out_csv);
    RandomStream rng(root_seed);

    if (suite == "prop1") {
        out << "instance,n_states,feature_dim,delta,oracle,closed_form,residual,restart_spread\n";
        const double deltas[] = {1e-3, 1e-2, 1e-1};
        for (int i = 0; i < seeds; ++i) {
            RandomStream inst_rng = rng.split(static_cast<std::uint64_t>(i));
            const int S = 3 + i % 4;
            const int d = std::min(2 + i % 3, S);
            const LinearRmdp mdp = LinearRmdp::random(S, 2, d, 0.8, 0.0, inst_rng);
            const LinearValue value = LinearValue::random(mdp.Phi, mdp.gamma, inst_rng);
            const Eigen::VectorXd row = mdp.P0.row(mdp.row(inst_rng.uniform_int(0, S - 1), 0));
            for (double delta : deltas) {
                const OracleReport rep =
                    ipm_inner_min_oracle(row, value, mdp.Phi, delta, inst_rng);
                const double closed = row.dot(value.values(mdp.Phi)) -
                                      delta * value.w.tail(value.w.size() - 1).norm();
                out << i << ',' << S << ',' << d << ',' << fmt(delta) << ',' << fmt(rep.value)
                    << ',' << fmt(closed) << ',' << fmt(std::abs(rep.value - closed)) << ','
                    << fmt(rep.restart_spread) << '\n';
            }
        }
    } else if (suite == "prop2") {
        out << "instance,n_states,n_actions,delta,bound,max_ratio\n";
        for (int i = 0; i < seeds; ++i) {
            RandomStream inst_rng = rng.split(static_cast<std::uint64_t>(i));
            const int S = 3 + i % 3;
            const int A = 2 + i % 2;
            LinearRmdp mdp = LinearRmdp::random_tabular(S, A, 0.75, 0.0, inst_rng);
            const double bound = prop2_delta_bound(mdp);
            mdp.delta = 0.9 * bound;
            double max_ratio = 0.0;
            const double span = 1.0 / (1.0 - mdp.gamma);
            for (int k = 0; k < 100; ++k) {
                Eigen::MatrixXd q1(S, A), q2(S, A);
                for (int s = 0; s < S; ++s)
                    for (int a = 0; a < A; ++a) {
                        q1(s, a) = inst_rng.uniform(0.0, span);
                        q2(s, a) = inst_rng.uniform(0.0, span);
                    }
                const double num = (robust_bellman_apply(q1, mdp).q -
                                    robust_bellman_apply(q2, mdp).q).norm();
                const double den = (q1 - q2).norm();
                if (den > 1e-12) max_ratio = std::max(max_ratio, num / den);
            }
            out << i << ',' << S << ',' << A << ',' << fmt(mdp.delta) << ',' << fmt(bound) << ','
                << fmt(max_ratio) << '\n';
        }
    } else if (suite == "fqi") {
        out << "instance,delta,sup_gap,used_ridge\n";
        for (int i = 0; i < std::min(seeds, 8); ++i) {
            RandomStream inst_rng = rng.split(static_cast<std::uint64_t>(i));
            const int S = 3 + i % 2;
            LinearRmdp mdp = LinearRmdp::random_tabular(S, 2, 0.75, 0.0, inst_rng);
            const auto data = sample_rmdp_balanced(mdp, 40000, inst_rng);
            const LinearRmdp emp = empirical_mdp(mdp, data);
            for (double delta : {0.0, 1e-2}) {
                LinearRmdp emp_d = emp;
                emp_d.delta = delta;
                const auto vi = robust_value_iteration(emp_d);
                const auto fqi = robust_fqi(data, mdp, delta, 60);
                const double gap = (fqi.q_table - vi.q_star).cwiseAbs().maxCoeff();
                out << i << ',' << fmt(delta) << ',' << fmt(gap) << ','
                    << (fqi.used_ridge ? 1 : 0) << '\n';
            }
        }
    } else if (suite == "thm1") {
        out << "n_samples,iterations,mean_gap,std_err\n";
        RandomStream inst_rng = rng.split(99);
        LinearRmdp mdp = LinearRmdp::random_tabular(4, 2, 0.75, 1e-2, inst_rng);
        const auto cells = theorem1_trend(mdp, {400, 800}, {1, 2, 4, 8, 16, 32}, seeds, inst_rng);
        for (const auto& c : cells)
            out << c.n_samples << ',' << c.iterations << ',' << fmt(c.mean_gap) << ','
                << fmt(c.std_err) << '\n';
    } else {
        throw ConfigError("verify-theory: unknown suite " + suite +
                          " (expected prop1|prop2|fqi|thm1)");
    }
    return out_csv;
}

} // namespace adrl
