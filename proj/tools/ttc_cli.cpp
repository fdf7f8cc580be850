// ttc: command-line harness for test-time compute allocation experiments.
//
//   ttc run    --config cfg.json [overrides]   one rule, one average budget, all seeds
//   ttc sweep  --config cfg.json [overrides]   rules x budgets x seeds
//   ttc theory --n 100 --delta 0.1 --trials 1000
//   ttc replay-check log.jsonl --gamma 1.0

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ttc/harness.hpp"

namespace
{

struct ExperimentFlags
{
    std::string config;
    std::vector<std::uint64_t> seeds;
    std::vector<std::string> rules;
    std::vector<std::uint64_t> avg_budgets;
    std::optional<std::uint64_t> k;
    std::optional<double> gamma;
    std::optional<double> lambda;
    std::optional<std::string> max_samples;
    std::optional<std::string> out;
};

void add_experiment_flags(CLI::App* cmd, ExperimentFlags& f)
{
    cmd->add_option("--config", f.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--seed", f.seeds, "Seed(s); comma-separated")->delimiter(',');
    cmd->add_option("--rule", f.rules, "Rule(s): elimination, ucb, gap, entropy, uniform")->delimiter(',');
    cmd->add_option("--avg-budget", f.avg_budgets, "Average per-query budget(s)")->delimiter(',');
    cmd->add_option("--k", f.k, "Generations per allocation step");
    cmd->add_option("--gamma", f.gamma, "Elimination threshold");
    cmd->add_option("--lambda", f.lambda, "Exploration weight (default 1 for ucb, 3 for entropy)");
    cmd->add_option("--max-samples", f.max_samples,
                    "Per-query cap: integer, 'unbounded' or 'preset:<name>'");
    cmd->add_option("--out", f.out, "Output directory");
}

int run_experiment_command(ExperimentFlags const& f, ttc::RunMode mode)
{
    auto config = ttc::load_experiment_config(f.config);

    ttc::ConfigOverrides o;
    if (!f.seeds.empty())
        o.seeds = f.seeds;
    if (!f.rules.empty())
    {
        std::vector<ttc::Rule> rules;
        for (auto const& r : f.rules)
            rules.push_back(ttc::parse_rule(r));
        o.rules = rules;
    }
    if (!f.avg_budgets.empty())
        o.avg_budgets = f.avg_budgets;
    o.k = f.k;
    o.gamma = f.gamma;
    o.lambda = f.lambda;
    o.max_samples = f.max_samples;
    if (f.out)
        o.out_dir = *f.out;
    ttc::apply_overrides(config, o);

    auto result = ttc::run_experiment(config, mode);
    ttc::write_experiment(result);

    int failed = 0;
    for (auto const& cell : result.cells)
    {
        if (cell.error.empty())
            continue;
        ++failed;
        std::cerr << "run failed (rule=" << ttc::to_string(cell.rule) << ", avg_budget=" << cell.avg_budget
                  << ", seed=" << cell.seed << "): " << cell.error << '\n';
    }
    std::cout << "wrote " << (config.out_dir / "summary.json").string() << " ("
              << result.cells.size() - static_cast<std::size_t>(failed) << "/" << result.cells.size()
              << " runs ok)\n";
    return failed ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Strategic test-time compute allocation harness"};
    app.require_subcommand(1);

    ExperimentFlags run_flags, sweep_flags;
    auto* run = app.add_subcommand("run", "Run one rule at one average budget over the seeds");
    add_experiment_flags(run, run_flags);
    auto* sweep = app.add_subcommand("sweep", "Run every rule x average budget x seed cell");
    add_experiment_flags(sweep, sweep_flags);

    ttc::TheoryRequest treq;
    std::string theory_rule = "elimination";
    std::vector<double> theory_deltas;
    bool theory_json = false;
    std::optional<std::string> theory_out;
    auto* theory = app.add_subcommand("theory", "Adaptive vs uniform budget to solve every query");
    theory->add_option("--n", treq.n, "Number of queries; deltas are i/n")->check(CLI::PositiveNumber);
    theory->add_option("--delta", treq.delta, "Failure probability");
    theory->add_option("--trials", treq.trials, "Monte Carlo trials")->check(CLI::PositiveNumber);
    theory->add_option("--seed", treq.seed, "Root seed");
    theory->add_option("--rule", theory_rule, "Adaptive rule");
    theory->add_option("--deltas", theory_deltas, "Explicit per-query deltas (comma-separated)")->delimiter(',');
    theory->add_flag("--json", theory_json, "Print JSON instead of text");
    theory->add_option("--out", theory_out, "Also write theory.json into this directory");

    std::string replay_path;
    double replay_gamma = 1.0, replay_slack = 0.0;
    auto* replay = app.add_subcommand("replay-check", "Validate and summarise a replay log");
    replay->add_option("log", replay_path, "Replay log (JSON Lines)")->required()->check(CLI::ExistingFile);
    replay->add_option("--gamma", replay_gamma, "Threshold for the agreement report");
    replay->add_option("--slack", replay_slack, "Threshold slack");

    CLI11_PARSE(app, argc, argv);

    try
    {
        if (*run)
            return run_experiment_command(run_flags, ttc::RunMode::single);
        if (*sweep)
            return run_experiment_command(sweep_flags, ttc::RunMode::sweep);
        if (*theory)
        {
            treq.rule = ttc::parse_rule(theory_rule);
            if (!theory_deltas.empty())
                treq.deltas = theory_deltas;
            auto report = ttc::run_theory(treq);
            auto json = ttc::theory_report_json(report);
            std::cout << (theory_json ? json : ttc::theory_report_text(report));
            if (theory_out)
            {
                std::filesystem::create_directories(*theory_out);
                std::ofstream(std::filesystem::path(*theory_out) / "theory.json", std::ios::binary) << json;
            }
            return 0;
        }
        if (*replay)
        {
            auto log = ttc::ReplayLog::load(replay_path);
            std::cout << ttc::replay_check_json(ttc::replay_check(log, replay_gamma, replay_slack));
            return 0;
        }
    }
    catch (ttc::ConfigError const& e)
    {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    }
    catch (std::exception const& e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
