#include "ttc/harness.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "json_writer.hpp"
#include "ttc/metrics.hpp"
#include "ttc/oracle.hpp"
#include "ttc/serialize.hpp"

namespace ttc
{
namespace
{
using nlohmann::json;
using ojson = nlohmann::ordered_json;

//----------------------------------------------------------------------------
// Field-level JSON readers
//----------------------------------------------------------------------------

class Fields
{
  public:
    Fields(json const& obj, std::string prefix) : obj_(obj), prefix_(std::move(prefix))
    {
        if (!obj_.is_object())
            throw ConfigError(where("") + "expected a JSON object");
    }

    bool has(char const* key) const { return obj_.contains(key) && !obj_.at(key).is_null(); }
    json const& at(char const* key) const { return obj_.at(key); }

    std::string where(std::string const& key) const
    {
        auto path = prefix_.empty() ? key : (key.empty() ? prefix_ : prefix_ + "." + key);
        return path.empty() ? std::string{} : path + ": ";
    }

    double number(char const* key) const
    {
        auto const& v = at(key);
        if (!v.is_number())
            throw ConfigError(where(key) + "expected a number");
        return v.get<double>();
    }

    std::uint64_t uint(char const* key) const { return as_uint(at(key), key); }

    std::uint64_t as_uint(json const& v, std::string const& key) const
    {
        if (!v.is_number_unsigned())
            throw ConfigError(where(key) + "expected a nonnegative integer");
        return v.get<std::uint64_t>();
    }

    std::string string(char const* key) const
    {
        auto const& v = at(key);
        if (!v.is_string())
            throw ConfigError(where(key) + "expected a string");
        return v.get<std::string>();
    }

    std::vector<std::uint64_t> uint_list(char const* key) const
    {
        auto const& v = at(key);
        if (!v.is_array() || v.empty())
            throw ConfigError(where(key) + "expected a nonempty array of nonnegative integers");
        std::vector<std::uint64_t> out;
        for (std::size_t i = 0; i < v.size(); ++i)
            out.push_back(as_uint(v[i], std::string(key) + "[" + std::to_string(i) + "]"));
        return out;
    }

    std::vector<double> number_list(char const* key) const
    {
        auto const& v = at(key);
        if (!v.is_array() || v.empty())
            throw ConfigError(where(key) + "expected a nonempty array of numbers");
        std::vector<double> out;
        for (std::size_t i = 0; i < v.size(); ++i)
        {
            if (!v[i].is_number())
                throw ConfigError(where(std::string(key) + "[" + std::to_string(i) + "]")
                                  + "expected a number");
            out.push_back(v[i].get<double>());
        }
        return out;
    }

    void reject_unknown(std::set<std::string> const& known) const
    {
        for (auto it = obj_.begin(); it != obj_.end(); ++it)
            if (!known.count(it.key()))
                throw ConfigError(where(it.key()) + "unknown field");
    }

  private:
    json const& obj_;
    std::string prefix_;
};

template <class F>
auto with_field(Fields const& f, char const* key, F&& parse)
{
    try
    {
        return parse();
    }
    catch (ConfigError const& e)
    {
        std::string msg = e.what();
        if (msg.rfind(key, 0) == 0)
            throw;
        throw ConfigError(f.where(key) + msg);
    }
}

GroupSpec parse_group(json const& j, std::string const& prefix)
{
    Fields f(j, prefix);
    f.reject_unknown({"label", "count", "delta", "invalid_prob", "wrong_vocab", "wrong_skew"});
    GroupSpec g;
    g.label = f.string("label");
    g.count = f.uint("count");
    g.delta = f.number("delta");
    if (f.has("invalid_prob"))
        g.invalid_prob = f.number("invalid_prob");
    if (f.has("wrong_vocab"))
        g.wrong_vocab = f.uint("wrong_vocab");
    if (f.has("wrong_skew"))
        g.wrong_skew = f.number("wrong_skew");
    if (!(g.delta >= 0.0 && g.delta <= 1.0))
        throw ConfigError(f.where("delta") + "must lie in [0, 1]");
    if (!(g.invalid_prob >= 0.0 && g.invalid_prob <= 1.0))
        throw ConfigError(f.where("invalid_prob") + "must lie in [0, 1]");
    if (g.wrong_vocab == 0)
        throw ConfigError(f.where("wrong_vocab") + "must be positive");
    return g;
}

BackendSpec parse_backend(json const& j, std::filesystem::path const& base_dir)
{
    Fields f(j, "backend");
    auto type = f.has("type") ? f.string("type") : std::string("synthetic");
    if (type == "synthetic")
    {
        f.reject_unknown({"type", "deltas", "harmonic_n", "population", "invalid_prob",
                          "wrong_vocab", "wrong_skew"});
        SyntheticBackendSpec s;
        int sources = int(f.has("deltas")) + int(f.has("harmonic_n")) + int(f.has("population"));
        if (sources != 1)
            throw ConfigError("backend: synthetic backend needs exactly one of deltas, harmonic_n, population");
        if (f.has("deltas"))
        {
            s.deltas = f.number_list("deltas");
            for (std::size_t i = 0; i < s.deltas.size(); ++i)
                if (!(s.deltas[i] >= 0.0 && s.deltas[i] <= 1.0))
                    throw ConfigError("backend.deltas[" + std::to_string(i) + "]: must lie in [0, 1]");
        }
        if (f.has("harmonic_n"))
        {
            auto n = f.uint("harmonic_n");
            if (n == 0)
                throw ConfigError("backend.harmonic_n: must be positive");
            s.deltas = theory::harmonic_deltas(n);
        }
        if (f.has("population"))
        {
            Fields pf(f.at("population"), "backend.population");
            pf.reject_unknown({"groups"});
            if (!pf.has("groups") || !pf.at("groups").is_array() || pf.at("groups").empty())
                throw ConfigError("backend.population.groups: expected a nonempty array");
            PopulationSpec pop;
            auto const& groups = pf.at("groups");
            for (std::size_t i = 0; i < groups.size(); ++i)
                pop.groups.push_back(
                    parse_group(groups[i], "backend.population.groups[" + std::to_string(i) + "]"));
            pop.validate();
            s.population = std::move(pop);
        }
        if (f.has("invalid_prob"))
            s.invalid_prob = f.number("invalid_prob");
        if (f.has("wrong_vocab"))
            s.wrong_vocab = f.uint("wrong_vocab");
        if (f.has("wrong_skew"))
            s.wrong_skew = f.number("wrong_skew");
        if (!(s.invalid_prob >= 0.0 && s.invalid_prob <= 1.0))
            throw ConfigError("backend.invalid_prob: must lie in [0, 1]");
        if (s.wrong_vocab == 0)
            throw ConfigError("backend.wrong_vocab: must be positive");
        return s;
    }
    if (type == "replay")
    {
        f.reject_unknown({"type", "path"});
        if (!f.has("path"))
            throw ConfigError("backend.path: required for the replay backend");
        std::filesystem::path p = f.string("path");
        if (p.is_relative() && !base_dir.empty())
            p = base_dir / p;
        return ReplayBackendSpec{p};
    }
    if (type == "live")
    {
        f.reject_unknown({"type"});
        return LiveBackendSpec{};
    }
    throw ConfigError("backend.type: unknown backend '" + type + "' (expected synthetic, replay or live)");
}

//----------------------------------------------------------------------------
// Backend construction
//----------------------------------------------------------------------------

/// Loads replay logs once and hands out fresh backends per cell.
class BackendFactory
{
  public:
    explicit BackendFactory(ExperimentConfig const& config) : config_(config)
    {
        if (auto const* r = std::get_if<ReplayBackendSpec>(&config.backend))
            log_ = ReplayLog::load(r->path);
        if (auto const* s = std::get_if<SyntheticBackendSpec>(&config.backend); s && s->population)
        {
            population_ = build_population(*s->population);
        }
    }

    std::unique_ptr<Backend> make(std::uint64_t seed) const
    {
        return std::visit(
            [&](auto const& spec) -> std::unique_ptr<Backend> {
                using T = std::decay_t<decltype(spec)>;
                if constexpr (std::is_same_v<T, SyntheticBackendSpec>)
                {
                    if (population_)
                        return std::make_unique<SyntheticBackend>(population_->instance, seed);
                    return std::make_unique<SyntheticBackend>(
                        SyntheticInstance::from_deltas(spec.deltas, spec.invalid_prob,
                                                       spec.wrong_vocab, spec.wrong_skew),
                        seed);
                }
                else if constexpr (std::is_same_v<T, ReplayBackendSpec>)
                {
                    return std::make_unique<ReplayBackend>(*log_);
                }
                else
                {
                    throw ConfigError("backend: the live backend needs a scoring hook and can only "
                                      "be driven through the library API");
                }
            },
            config_.backend);
    }

    std::optional<Population> const& population() const { return population_; }
    std::optional<ReplayLog> const& log() const { return log_; }

  private:
    ExperimentConfig const& config_;
    std::optional<ReplayLog> log_;
    std::optional<Population> population_;
};

std::optional<double> safe_coverage(std::vector<QueryState> const& states)
{
    try
    {
        return coverage(states);
    }
    catch (CoverageUnavailable const&)
    {
        return std::nullopt;
    }
}

std::optional<double> safe_accuracy(std::vector<QueryState> const& states)
{
    try
    {
        return accuracy(states);
    }
    catch (CoverageUnavailable const&)
    {
        return std::nullopt;
    }
}

ojson opt_number(std::optional<double> v)
{
    return v ? ojson(*v) : ojson(nullptr);
}

std::string max_samples_text(ExperimentConfig const& c)
{
    if (c.max_samples_preset)
        return "preset:" + *c.max_samples_preset;
    if (c.alloc.max_samples == unbounded)
        return "unbounded";
    return std::to_string(c.alloc.max_samples);
}

/// Per (rule, avg_budget) aggregate over successful seeds.
struct Aggregate
{
    Rule rule;
    std::uint64_t avg_budget;
    std::uint64_t total_budget;
    std::size_t n_seeds = 0;
    std::optional<MeanStd> coverage;
    std::optional<MeanStd> accuracy;
    double spent_mean = 0.0;
};

std::vector<Aggregate> aggregate(ExperimentResult const& result)
{
    std::vector<Aggregate> out;
    auto const n = result.n_queries;
    for (auto rule : result.config.rules)
    {
        for (auto b : result.config.avg_budgets)
        {
            Aggregate a{rule, b, b * n, 0, std::nullopt, std::nullopt, 0.0};
            std::vector<double> cov, acc, spent;
            bool metrics_ok = true;
            for (auto const& cell : result.cells)
            {
                if (cell.rule != rule || cell.avg_budget != b || !cell.run)
                    continue;
                ++a.n_seeds;
                spent.push_back(static_cast<double>(cell.run->ledger.spent));
                auto c = safe_coverage(cell.run->states);
                auto ac = safe_accuracy(cell.run->states);
                if (!c || !ac)
                    metrics_ok = false;
                else
                {
                    cov.push_back(*c);
                    acc.push_back(*ac);
                }
            }
            if (a.n_seeds > 0)
            {
                a.spent_mean = mean_std(spent).mean;
                if (metrics_ok)
                {
                    a.coverage = mean_std(cov);
                    a.accuracy = mean_std(acc);
                }
            }
            out.push_back(a);
        }
    }
    return out;
}

std::string text_of(std::vector<std::string> const& lines)
{
    std::string out;
    for (auto const& l : lines)
    {
        out += l;
        out += '\n';
    }
    return out;
}
}  // namespace

//----------------------------------------------------------------------------
// Presets
//----------------------------------------------------------------------------

namespace
{
struct Preset
{
    char const* name;
    std::uint64_t values[4];  // avg budgets 4, 8, 16, 32
};

constexpr Preset presets[] = {
    {"llama-3.1-gt", {40, 40, 120, 300}},
    {"llama-3.1-prm", {12, 40, 80, 120}},
    {"llama-3.2-gt", {40, 40, 120, 120}},
    {"llama-3.2-prm", {12, 12, 60, 60}},
};
}  // namespace

std::vector<std::string> max_samples_preset_names()
{
    std::vector<std::string> out;
    for (auto const& p : presets)
        out.emplace_back(p.name);
    return out;
}

std::uint64_t max_samples_preset(std::string const& name, std::uint64_t avg_budget)
{
    for (auto const& p : presets)
    {
        if (name != p.name)
            continue;
        switch (avg_budget)
        {
            case 4: return p.values[0];
            case 8: return p.values[1];
            case 16: return p.values[2];
            case 32: return p.values[3];
            default:
                throw ConfigError("max_samples: preset '" + name + "' covers average budgets 4, 8, 16 "
                                  "and 32 only, not " + std::to_string(avg_budget));
        }
    }
    throw ConfigError("max_samples: unknown preset '" + name + "'");
}

//----------------------------------------------------------------------------
// Configuration
//----------------------------------------------------------------------------

void ExperimentConfig::validate() const
{
    if (rules.empty())
        throw ConfigError("rules: at least one rule is required");
    if (avg_budgets.empty())
        throw ConfigError("avg_budgets: at least one budget is required");
    if (seeds.empty())
        throw ConfigError("seeds: at least one seed is required");
    for (auto b : avg_budgets)
    {
        if (b == 0)
            throw ConfigError("avg_budgets: budgets must be positive");
        if (max_samples_preset)
            ttc::max_samples_preset(*max_samples_preset, b);
    }
    if (lambda && !(*lambda >= 0.0))
        throw ConfigError("lambda: must be nonnegative");
    AllocConfig probe = alloc;
    probe.lambda = lambda.value_or(1.0);
    probe.validate();
    if (auto const* s = std::get_if<SyntheticBackendSpec>(&backend))
    {
        if (!s->population && s->deltas.empty())
            throw ConfigError("backend: synthetic backend has no queries");
    }
}

std::size_t ExperimentConfig::n_queries() const
{
    if (auto const* s = std::get_if<SyntheticBackendSpec>(&backend))
        return s->population ? s->population->size() : s->deltas.size();
    if (auto const* r = std::get_if<ReplayBackendSpec>(&backend))
        return ReplayLog::load(r->path).queries.size();
    return 0;
}

void set_max_samples(ExperimentConfig& config, std::string const& value)
{
    config.max_samples_preset.reset();
    if (value == "unbounded")
    {
        config.alloc.max_samples = unbounded;
        return;
    }
    if (value.rfind("preset:", 0) == 0)
    {
        auto name = value.substr(7);
        max_samples_preset(name, 4);
        config.max_samples_preset = name;
        return;
    }
    std::size_t used = 0;
    unsigned long long v = 0;
    try
    {
        v = std::stoull(value, &used);
    }
    catch (std::exception const&)
    {
        used = 0;
    }
    if (used != value.size() || v == 0 || value.front() == '-')
        throw ConfigError("max_samples: expected a positive integer, \"unbounded\" or "
                          "\"preset:<name>\", got '" + value + "'");
    config.alloc.max_samples = v;
}

ExperimentConfig parse_experiment_config(std::string const& json_text,
                                         std::filesystem::path const& base_dir)
{
    json root;
    try
    {
        root = json::parse(json_text);
    }
    catch (json::parse_error const& e)
    {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    Fields f(root, "");
    f.reject_unknown({"rule", "rules", "avg_budget", "avg_budgets", "seed", "seeds", "k", "gamma",
                      "gamma_slack", "lambda", "max_samples", "on_replay_exhausted", "backend", "out"});

    ExperimentConfig c;
    if (f.has("rule") && f.has("rules"))
        throw ConfigError("rule: give either rule or rules, not both");
    if (f.has("rule"))
        c.rules = {with_field(f, "rule", [&] { return parse_rule(f.string("rule")); })};
    if (f.has("rules"))
    {
        auto const& v = f.at("rules");
        if (!v.is_array() || v.empty())
            throw ConfigError("rules: expected a nonempty array of rule names");
        c.rules.clear();
        for (std::size_t i = 0; i < v.size(); ++i)
        {
            auto key = "rules[" + std::to_string(i) + "]";
            if (!v[i].is_string())
                throw ConfigError(key + ": expected a string");
            try
            {
                c.rules.push_back(parse_rule(v[i].get<std::string>()));
            }
            catch (ConfigError const& e)
            {
                throw ConfigError(key + ": " + e.what());
            }
        }
    }

    if (f.has("avg_budget") && f.has("avg_budgets"))
        throw ConfigError("avg_budget: give either avg_budget or avg_budgets, not both");
    if (f.has("avg_budget"))
        c.avg_budgets = {f.uint("avg_budget")};
    if (f.has("avg_budgets"))
        c.avg_budgets = f.uint_list("avg_budgets");

    if (f.has("seed") && f.has("seeds"))
        throw ConfigError("seed: give either seed or seeds, not both");
    if (f.has("seed"))
        c.seeds = {f.uint("seed")};
    if (f.has("seeds"))
        c.seeds = f.uint_list("seeds");

    if (f.has("k"))
        c.alloc.k_per_step = f.uint("k");
    if (f.has("gamma"))
        c.alloc.gamma = f.number("gamma");
    if (f.has("gamma_slack"))
        c.alloc.gamma_slack = f.number("gamma_slack");
    if (f.has("lambda"))
        c.lambda = f.number("lambda");
    if (f.has("max_samples"))
    {
        auto const& v = f.at("max_samples");
        if (v.is_number_unsigned())
            set_max_samples(c, std::to_string(v.get<std::uint64_t>()));
        else if (v.is_string())
            set_max_samples(c, v.get<std::string>());
        else
            throw ConfigError("max_samples: expected a positive integer or a string");
    }
    if (f.has("on_replay_exhausted"))
        c.alloc.on_replay_exhausted = parse_replay_policy(f.string("on_replay_exhausted"));
    if (f.has("backend"))
        c.backend = parse_backend(f.at("backend"), base_dir);
    if (f.has("out"))
    {
        std::filesystem::path p = f.string("out");
        c.out_dir = p;
    }
    c.validate();
    return c;
}

ExperimentConfig load_experiment_config(std::filesystem::path const& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_experiment_config(ss.str(), path.parent_path());
}

void apply_overrides(ExperimentConfig& config, ConfigOverrides const& o)
{
    if (o.seeds)
        config.seeds = *o.seeds;
    if (o.rules)
        config.rules = *o.rules;
    if (o.avg_budgets)
        config.avg_budgets = *o.avg_budgets;
    if (o.k)
        config.alloc.k_per_step = *o.k;
    if (o.gamma)
        config.alloc.gamma = *o.gamma;
    if (o.lambda)
        config.lambda = *o.lambda;
    if (o.max_samples)
        set_max_samples(config, *o.max_samples);
    if (o.out_dir)
        config.out_dir = *o.out_dir;
    config.validate();
}

AllocConfig cell_config(ExperimentConfig const& config, Rule rule, std::uint64_t avg_budget,
                        std::uint64_t seed, std::size_t n_queries)
{
    AllocConfig a = config.alloc;
    a.rule = rule;
    a.total_budget = avg_budget * n_queries;
    a.lambda = config.lambda.value_or(default_lambda(rule));
    if (config.max_samples_preset)
        a.max_samples = max_samples_preset(*config.max_samples_preset, avg_budget);
    a.seed = seed;
    return a;
}

std::unique_ptr<Backend> make_backend(ExperimentConfig const& config, std::uint64_t seed)
{
    return BackendFactory(config).make(seed);
}

//----------------------------------------------------------------------------
// Running
//----------------------------------------------------------------------------

bool ExperimentResult::ok() const
{
    return std::all_of(cells.begin(), cells.end(), [](auto const& c) { return c.error.empty(); });
}

ExperimentResult run_experiment(ExperimentConfig const& config, RunMode mode)
{
    config.validate();
    if (mode == RunMode::single && (config.rules.size() != 1 || config.avg_budgets.size() != 1))
        throw ConfigError("run expects exactly one rule and one avg_budget; use sweep for grids");

    BackendFactory factory(config);
    std::size_t const n = factory.log() ? factory.log()->queries.size() : config.n_queries();

    ExperimentResult result;
    result.config = config;
    result.n_queries = n;
    if (factory.population())
        result.group_stats.emplace();

    for (auto rule : config.rules)
    {
        for (auto b : config.avg_budgets)
        {
            for (auto seed : config.seeds)
            {
                CellResult cell{rule, b, seed, std::nullopt, {}};
                try
                {
                    auto alloc = cell_config(config, rule, b, seed, n);
                    auto backend = factory.make(seed);
                    cell.run = run_allocation(*backend, alloc);
                }
                catch (Error const& e)
                {
                    cell.error = e.what();
                }
                if (result.group_stats)
                {
                    auto const& s = std::get<SyntheticBackendSpec>(config.backend);
                    result.group_stats->push_back(
                        cell.run ? group_stats(*s.population, *factory.population(), *cell.run, b)
                                 : std::vector<GroupStats>{});
                }
                result.cells.push_back(std::move(cell));
            }
        }
    }
    return result;
}

std::string trace_file_name(Rule rule, std::uint64_t avg_budget, std::uint64_t seed)
{
    return std::string(to_string(rule)) + "_b" + std::to_string(avg_budget) + "_s"
           + std::to_string(seed) + ".csv";
}

std::string summary_json(ExperimentResult const& result)
{
    auto const& c = result.config;
    ojson root = ojson::object();

    ojson cfg = ojson::object();
    ojson rules = ojson::array();
    for (auto r : c.rules)
        rules.push_back(std::string(to_string(r)));
    cfg["rules"] = rules;
    cfg["avg_budgets"] = c.avg_budgets;
    cfg["seeds"] = c.seeds;
    cfg["k"] = c.alloc.k_per_step;
    cfg["gamma"] = c.alloc.gamma;
    cfg["gamma_slack"] = c.alloc.gamma_slack;
    cfg["lambda"] = c.lambda ? ojson(*c.lambda) : ojson("default");
    cfg["max_samples"] = max_samples_text(c);
    cfg["on_replay_exhausted"] = std::string(to_string(c.alloc.on_replay_exhausted));
    cfg["backend"] = std::visit(
        [](auto const& spec) -> std::string {
            using T = std::decay_t<decltype(spec)>;
            if constexpr (std::is_same_v<T, SyntheticBackendSpec>)
                return spec.population ? "synthetic-population" : "synthetic";
            else if constexpr (std::is_same_v<T, ReplayBackendSpec>)
                return "replay";
            else
                return "live";
        },
        c.backend);
    root["config"] = cfg;

    ojson runs = ojson::array();
    for (auto const& cell : result.cells)
    {
        ojson r = ojson::object();
        r["rule"] = std::string(to_string(cell.rule));
        r["avg_budget"] = cell.avg_budget;
        r["seed"] = cell.seed;
        if (cell.run)
        {
            auto const& run = *cell.run;
            std::size_t eliminated = 0, capped = 0;
            for (auto const& s : run.states)
            {
                eliminated += s.status == QueryStatus::eliminated;
                capped += s.status == QueryStatus::capped;
            }
            r["total_budget"] = run.ledger.total;
            r["spent"] = run.ledger.spent;
            r["unspent"] = run.ledger.remaining();
            r["oracle_calls"] = oracle_call_count(run.trace);
            r["rounds"] = run.trace.rounds;
            r["stop"] = std::string(to_string(run.trace.stop));
            r["coverage"] = opt_number(safe_coverage(run.states));
            r["accuracy"] = opt_number(safe_accuracy(run.states));
            r["eliminated"] = eliminated;
            r["capped"] = capped;
            r["allocation"] = run.ledger.per_query;
        }
        else
        {
            r["error"] = cell.error;
        }
        runs.push_back(r);
    }
    root["n_queries"] = result.n_queries;
    root["runs"] = runs;

    auto aggs = aggregate(result);
    auto find_uniform = [&](std::uint64_t b) -> Aggregate const* {
        for (auto const& a : aggs)
            if (a.rule == Rule::uniform && a.avg_budget == b)
                return &a;
        return nullptr;
    };

    ojson agg_json = ojson::array();
    for (auto const& a : aggs)
    {
        ojson j = ojson::object();
        j["rule"] = std::string(to_string(a.rule));
        j["avg_budget"] = a.avg_budget;
        j["total_budget"] = a.total_budget;
        j["n_seeds"] = a.n_seeds;
        j["spent_mean"] = a.spent_mean;
        j["coverage_mean"] = opt_number(a.coverage ? std::optional(a.coverage->mean) : std::nullopt);
        j["coverage_std"] = opt_number(a.coverage ? std::optional(a.coverage->stddev) : std::nullopt);
        j["accuracy_mean"] = opt_number(a.accuracy ? std::optional(a.accuracy->mean) : std::nullopt);
        j["accuracy_std"] = opt_number(a.accuracy ? std::optional(a.accuracy->stddev) : std::nullopt);
        auto const* u = find_uniform(a.avg_budget);
        if (a.rule != Rule::uniform && u && a.coverage && u->coverage)
        {
            j["coverage_vs_uniform_abs"] = a.coverage->mean - u->coverage->mean;
            j["coverage_vs_uniform_rel"] =
                opt_number(relative_improvement(a.coverage->mean, u->coverage->mean));
            j["accuracy_vs_uniform_abs"] = a.accuracy->mean - u->accuracy->mean;
            j["accuracy_vs_uniform_rel"] =
                opt_number(relative_improvement(a.accuracy->mean, u->accuracy->mean));
        }
        agg_json.push_back(j);
    }
    root["aggregates"] = agg_json;

    // Efficiency gain of each adaptive rule over uniform on the mean curves.
    ojson gains = ojson::array();
    bool has_uniform = std::find(c.rules.begin(), c.rules.end(), Rule::uniform) != c.rules.end();
    if (has_uniform)
    {
        auto curve_for = [&](Rule rule) {
            std::vector<PerfPoint> pts;
            for (auto const& a : aggs)
                if (a.rule == rule && a.coverage && a.accuracy)
                    pts.push_back(PerfPoint{static_cast<double>(a.total_budget), a.coverage->mean,
                                            a.accuracy->mean});
            std::sort(pts.begin(), pts.end(),
                      [](auto const& x, auto const& y) { return x.budget < y.budget; });
            return pts;
        };
        auto baseline = curve_for(Rule::uniform);
        for (auto rule : c.rules)
        {
            if (rule == Rule::uniform)
                continue;
            auto adaptive = curve_for(rule);
            for (auto metric : {Metric::coverage, Metric::accuracy})
            {
                for (auto const& p : adaptive)
                {
                    ojson g = ojson::object();
                    g["rule"] = std::string(to_string(rule));
                    g["metric"] = metric == Metric::coverage ? "coverage" : "accuracy";
                    g["total_budget"] = p.budget;
                    try
                    {
                        g["gain"] = opt_number(efficiency_gain(adaptive, baseline, p.budget, metric));
                    }
                    catch (InvalidArgument const&)
                    {
                        g["gain"] = nullptr;  // non-monotone curve
                    }
                    gains.push_back(g);
                }
            }
        }
    }
    root["efficiency_gain"] = gains;
    return detail::to_json_text(root);
}

std::string plotdata_csv(ExperimentResult const& result)
{
    std::vector<std::string> lines{plotdata_csv_header};
    for (auto const& a : aggregate(result))
    {
        std::string line = std::string(to_string(a.rule)) + "," + std::to_string(a.avg_budget) + ","
                           + std::to_string(a.total_budget) + "," + std::to_string(a.n_seeds);
        for (auto const& m : {a.coverage, a.accuracy})
        {
            if (m)
                line += "," + format_double(m->mean) + "," + format_double(m->lower_half_band()) + ","
                        + format_double(m->upper_half_band());
            else
                line += ",,,";
        }
        line += "," + (a.n_seeds ? format_double(a.spent_mean) : std::string{});
        lines.push_back(line);
    }
    return text_of(lines);
}

std::string groups_csv(ExperimentResult const& result)
{
    std::vector<std::string> lines{groups_csv_header};
    if (!result.group_stats)
        return text_of(lines);
    for (std::size_t i = 0; i < result.cells.size(); ++i)
    {
        auto const& cell = result.cells[i];
        for (auto const& g : (*result.group_stats)[i])
        {
            lines.push_back(g.label + "," + std::string(to_string(cell.rule)) + ","
                            + std::to_string(cell.avg_budget) + "," + std::to_string(cell.seed) + ","
                            + format_double(g.mean_spend) + "," + format_double(g.frac_above_avg)
                            + "," + format_double(g.coverage));
        }
    }
    return text_of(lines);
}

void write_experiment(ExperimentResult const& result)
{
    namespace fs = std::filesystem;
    auto const& dir = result.config.out_dir;
    fs::create_directories(dir / "traces");

    auto write_file = [](fs::path const& p, std::string const& text) {
        std::ofstream out(p, std::ios::binary);
        if (!out)
            throw Error("cannot write '" + p.string() + "'");
        out << text;
    };

    for (auto const& cell : result.cells)
    {
        if (!cell.run)
            continue;
        std::ostringstream ss;
        write_trace_csv(ss, cell.run->trace);
        write_file(dir / "traces" / trace_file_name(cell.rule, cell.avg_budget, cell.seed), ss.str());
    }
    write_file(dir / "summary.json", summary_json(result));
    write_file(dir / "plotdata.csv", plotdata_csv(result));
    if (result.group_stats)
        write_file(dir / "groups.csv", groups_csv(result));
}

//----------------------------------------------------------------------------
// Theory
//----------------------------------------------------------------------------

TheoryReport run_theory(TheoryRequest const& req)
{
    TheoryReport rep;
    if (req.deltas)
    {
        rep.deltas = *req.deltas;
    }
    else
    {
        if (req.n < 2)
            throw ConfigError("n: must be at least 2");
        rep.deltas = theory::harmonic_deltas(req.n);
    }
    if (!(req.delta > 0.0 && req.delta < 1.0))
        throw ConfigError("delta: must lie in (0, 1)");
    rep.delta = req.delta;
    rep.trials = req.trials;
    rep.rule = req.rule;
    rep.bounds = theory::budget_bounds(rep.deltas, req.delta, req.rule, req.trials, req.seed);
    return rep;
}

std::string theory_report_text(TheoryReport const& r)
{
    auto const& b = r.bounds;
    std::vector<std::string> lines{
        "queries                      " + std::to_string(r.deltas.size()),
        "delta                        " + format_double(r.delta),
        "rule                         " + std::string(to_string(r.rule)),
        "trials                       " + std::to_string(r.trials),
        "expected adaptive (sum 1/d)  " + format_double(b.expected_adaptive),
        "adaptive union bound         " + format_double(b.adaptive_closed_form),
        "adaptive MC mean             " + format_double(b.mc_adaptive_mean),
        "adaptive MC stddev           " + format_double(b.mc_adaptive_stddev),
        "MC within union bound        " + format_double(b.mc_success_rate),
        "uniform per-query m*         " + std::to_string(b.uniform_per_query),
        "uniform required budget      " + std::to_string(b.uniform_required),
        "ratio uniform/adaptive       " + format_double(b.separation_ratio()),
    };
    return text_of(lines);
}

std::string theory_report_json(TheoryReport const& r)
{
    auto const& b = r.bounds;
    ojson j = ojson::object();
    j["n_queries"] = r.deltas.size();
    j["delta"] = r.delta;
    j["rule"] = std::string(to_string(r.rule));
    j["trials"] = r.trials;
    j["expected_adaptive"] = b.expected_adaptive;
    j["adaptive_closed_form"] = b.adaptive_closed_form;
    j["mc_adaptive_mean"] = b.mc_adaptive_mean;
    j["mc_adaptive_stddev"] = b.mc_adaptive_stddev;
    j["mc_success_rate"] = b.mc_success_rate;
    j["uniform_per_query"] = b.uniform_per_query;
    j["uniform_required"] = b.uniform_required;
    j["ratio"] = b.separation_ratio();
    return detail::to_json_text(j);
}

//----------------------------------------------------------------------------
// Replay check
//----------------------------------------------------------------------------

ReplayCheckReport replay_check(ReplayLog const& log, double gamma, double slack)
{
    if (!(gamma >= 0.0 && gamma <= 1.0) || !(slack >= 0.0) || gamma - slack < 0.0)
        throw ConfigError("gamma/slack: need 0 <= gamma - slack <= gamma <= 1");
    ReplayCheckReport rep;
    rep.gamma = gamma;
    rep.slack = slack;
    rep.n_queries = log.queries.size();
    rep.min_stream = log.streams.empty() ? 0 : log.streams.front().size();
    bool all_labelled = true;
    std::size_t covered = 0;
    for (auto const& stream : log.streams)
    {
        rep.n_generations += stream.size();
        rep.min_stream = std::min(rep.min_stream, stream.size());
        rep.max_stream = std::max(rep.max_stream, stream.size());
        auto agree = threshold_agreement(stream, gamma, slack);
        rep.labelled += agree.labelled;
        rep.disagreements += agree.disagreements;
        rep.false_accepts += agree.false_accepts;
        rep.false_rejects += agree.false_rejects;
        if (agree.labelled != stream.size())
            all_labelled = false;
        if (std::any_of(stream.begin(), stream.end(), [](auto const& r) { return r.correct.value_or(false); }))
            ++covered;
    }
    rep.disagreement_rate =
        rep.labelled ? static_cast<double>(rep.disagreements) / static_cast<double>(rep.labelled) : 0.0;
    if (all_labelled && rep.n_queries > 0)
        rep.coverage_full_log = static_cast<double>(covered) / static_cast<double>(rep.n_queries);
    return rep;
}

std::string replay_check_json(ReplayCheckReport const& r)
{
    ojson j = ojson::object();
    j["n_queries"] = r.n_queries;
    j["n_generations"] = r.n_generations;
    j["min_stream"] = r.min_stream;
    j["max_stream"] = r.max_stream;
    j["labelled"] = r.labelled;
    j["gamma"] = r.gamma;
    j["gamma_slack"] = r.slack;
    j["disagreements"] = r.disagreements;
    j["false_accepts"] = r.false_accepts;
    j["false_rejects"] = r.false_rejects;
    j["disagreement_rate"] = r.disagreement_rate;
    j["coverage_full_log"] = opt_number(r.coverage_full_log);
    return detail::to_json_text(j);
}

}  // namespace ttc
