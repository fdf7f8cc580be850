#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ttc/allocator.hpp"
#include "ttc/backend.hpp"
#include "ttc/synth_experiments.hpp"
#include "ttc/theory.hpp"

namespace ttc
{

//----------------------------------------------------------------------------
// max_samples presets (MATH-500 settings by model/oracle and average budget)
//----------------------------------------------------------------------------

/// Known preset names: llama-3.1-gt, llama-3.1-prm, llama-3.2-gt, llama-3.2-prm.
std::vector<std::string> max_samples_preset_names();

/// Throws ConfigError for an unknown preset or a budget the preset does not cover.
std::uint64_t max_samples_preset(std::string const& name, std::uint64_t avg_budget);

//----------------------------------------------------------------------------
// Experiment configuration
//----------------------------------------------------------------------------

struct SyntheticBackendSpec
{
    // Exactly one population source is used: population if set, else deltas.
    std::vector<double> deltas;
    std::optional<PopulationSpec> population;
    double invalid_prob = 0.0;
    std::size_t wrong_vocab = 1;
    double wrong_skew = 0.0;
};

struct ReplayBackendSpec
{
    std::filesystem::path path;
};

struct LiveBackendSpec
{
};

using BackendSpec = std::variant<SyntheticBackendSpec, ReplayBackendSpec, LiveBackendSpec>;

struct ExperimentConfig
{
    AllocConfig alloc;                 // rule and total_budget are filled per cell
    std::optional<double> lambda;      // unset: default per rule
    std::optional<std::string> max_samples_preset;
    std::vector<Rule> rules{Rule::elimination};
    std::vector<std::uint64_t> avg_budgets{4, 8, 16, 32};
    std::vector<std::uint64_t> seeds{0, 1, 2, 3};
    BackendSpec backend = SyntheticBackendSpec{};
    std::filesystem::path out_dir = "out";

    void validate() const;
    std::size_t n_queries() const;
};

/// Parses a JSON config; errors name the offending field. Relative replay
/// paths resolve against base_dir.
ExperimentConfig parse_experiment_config(std::string const& json_text,
                                         std::filesystem::path const& base_dir = {});
ExperimentConfig load_experiment_config(std::filesystem::path const& path);

/// Command-line overrides; set fields replace the config's values.
struct ConfigOverrides
{
    std::optional<std::vector<std::uint64_t>> seeds;
    std::optional<std::vector<Rule>> rules;
    std::optional<std::vector<std::uint64_t>> avg_budgets;
    std::optional<std::uint64_t> k;
    std::optional<double> gamma;
    std::optional<double> lambda;
    std::optional<std::string> max_samples;  // integer, "unbounded" or "preset:<name>"
    std::optional<std::filesystem::path> out_dir;
};

void apply_overrides(ExperimentConfig& config, ConfigOverrides const& overrides);

/// Sets alloc.max_samples / max_samples_preset from "unbounded", an integer or "preset:<name>".
void set_max_samples(ExperimentConfig& config, std::string const& value);

/// The AllocConfig a single (rule, avg_budget, seed) cell runs with.
/// total_budget = avg_budget * n_queries.
AllocConfig cell_config(ExperimentConfig const& config, Rule rule, std::uint64_t avg_budget,
                        std::uint64_t seed, std::size_t n_queries);

/// Fresh backend for one cell. Live backends cannot be built from a config
/// because they need a scoring hook; this throws ConfigError for them.
std::unique_ptr<Backend> make_backend(ExperimentConfig const& config, std::uint64_t seed);

//----------------------------------------------------------------------------
// Running and writing experiments
//----------------------------------------------------------------------------

struct CellResult
{
    Rule rule = Rule::elimination;
    std::uint64_t avg_budget = 0;
    std::uint64_t seed = 0;
    std::optional<RunResult> run;
    std::string error;  // non-empty if the run failed
};

struct ExperimentResult
{
    ExperimentConfig config;
    std::size_t n_queries = 0;
    std::vector<CellResult> cells;  // rule-major, then budget, then seed
    std::optional<std::vector<std::vector<GroupStats>>> group_stats;  // per cell, population backends

    bool ok() const;
};

enum class RunMode
{
    single,  // exactly one rule and one budget
    sweep,
};

ExperimentResult run_experiment(ExperimentConfig const& config, RunMode mode);

/// Trace file name for one cell, e.g. "elimination_b8_s3.csv".
std::string trace_file_name(Rule rule, std::uint64_t avg_budget, std::uint64_t seed);

/// Summary JSON text (17 significant digits per float).
std::string summary_json(ExperimentResult const& result);

inline constexpr char const* plotdata_csv_header =
    "rule,avg_budget,total_budget,n_seeds,coverage_mean,coverage_lo,coverage_hi,"
    "accuracy_mean,accuracy_lo,accuracy_hi,spent_mean";

/// Per (rule, avg_budget): mean and mean ± 0.5 std of coverage/accuracy across seeds.
std::string plotdata_csv(ExperimentResult const& result);

inline constexpr char const* groups_csv_header =
    "group,rule,avg_budget,seed,mean_spend,frac_above_avg,coverage";

std::string groups_csv(ExperimentResult const& result);

/// Writes traces/<cell>.csv, summary.json, plotdata.csv (and groups.csv for
/// population backends) under config.out_dir.
void write_experiment(ExperimentResult const& result);

//----------------------------------------------------------------------------
// Theory and replay reports
//----------------------------------------------------------------------------

struct TheoryRequest
{
    std::size_t n = 100;
    double delta = 0.1;
    std::uint64_t trials = 1000;
    std::uint64_t seed = 0;
    Rule rule = Rule::elimination;
    std::optional<std::vector<double>> deltas;  // replaces [i/n] when set
};

struct TheoryReport
{
    std::vector<double> deltas;
    double delta = 0.0;
    std::uint64_t trials = 0;
    Rule rule = Rule::elimination;
    theory::BudgetBounds bounds;
};

TheoryReport run_theory(TheoryRequest const& request);
std::string theory_report_text(TheoryReport const& report);
std::string theory_report_json(TheoryReport const& report);

struct ReplayCheckReport
{
    std::size_t n_queries = 0;
    std::size_t n_generations = 0;
    std::size_t min_stream = 0;
    std::size_t max_stream = 0;
    std::size_t labelled = 0;
    double gamma = 1.0;
    double slack = 0.0;
    std::uint64_t disagreements = 0;
    std::uint64_t false_accepts = 0;
    std::uint64_t false_rejects = 0;
    double disagreement_rate = 0.0;
    std::optional<double> coverage_full_log;  // fraction of queries with any correct entry
};

/// Validates a replay log (parse errors propagate) and summarises it.
ReplayCheckReport replay_check(ReplayLog const& log, double gamma, double slack);
std::string replay_check_json(ReplayCheckReport const& report);

}  // namespace ttc
