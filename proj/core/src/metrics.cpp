#include "ttc/metrics.hpp"

#include <cmath>
#include <string>

namespace ttc
{
namespace
{
void require_labels(QueryState const& s)
{
    for (auto const& r : s.responses)
        if (!r.correct)
            throw CoverageUnavailable(s.query.id);
}

double value_of(PerfPoint const& p, Metric m)
{
    return m == Metric::coverage ? p.coverage : p.accuracy;
}

void validate_curve(std::span<PerfPoint const> curve, Metric m, char const* name)
{
    if (curve.empty())
        throw InvalidArgument(std::string(name) + " curve is empty");
    for (std::size_t i = 0; i < curve.size(); ++i)
    {
        if (!(curve[i].budget > 0.0))
            throw InvalidArgument(std::string(name) + " curve: budgets must be positive");
        if (i == 0)
            continue;
        if (!(curve[i].budget > curve[i - 1].budget))
            throw InvalidArgument(std::string(name) + " curve: budgets must be strictly increasing");
        if (value_of(curve[i], m) < value_of(curve[i - 1], m))
            throw InvalidArgument(std::string(name) + " curve is not monotone in budget");
    }
}

double interpolate_at(std::span<PerfPoint const> curve, double budget, Metric m)
{
    for (std::size_t i = 1; i < curve.size(); ++i)
    {
        if (budget <= curve[i].budget)
        {
            auto const& a = curve[i - 1];
            auto const& b = curve[i];
            double t = (budget - a.budget) / (b.budget - a.budget);
            return value_of(a, m) + t * (value_of(b, m) - value_of(a, m));
        }
    }
    return value_of(curve.back(), m);
}

std::optional<double> first_budget_reaching(std::span<PerfPoint const> curve, double v, Metric m)
{
    if (value_of(curve.front(), m) >= v)
        return curve.front().budget;
    for (std::size_t i = 1; i < curve.size(); ++i)
    {
        double hi = value_of(curve[i], m);
        if (hi < v)
            continue;
        double lo = value_of(curve[i - 1], m);
        double t = (v - lo) / (hi - lo);
        return curve[i - 1].budget + t * (curve[i].budget - curve[i - 1].budget);
    }
    return std::nullopt;
}

double pairwise_sum(std::span<double const> v)
{
    if (v.size() <= 8)
    {
        double s = 0.0;
        for (double x : v)
            s += x;
        return s;
    }
    auto half = v.size() / 2;
    return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}
}  // namespace

double coverage(std::span<QueryState const> states)
{
    if (states.empty())
        throw InvalidArgument("coverage of an empty query set");
    std::size_t hit = 0;
    for (auto const& s : states)
    {
        require_labels(s);
        for (auto const& r : s.responses)
        {
            if (*r.correct)
            {
                ++hit;
                break;
            }
        }
    }
    return static_cast<double>(hit) / static_cast<double>(states.size());
}

double accuracy(std::span<QueryState const> states)
{
    if (states.empty())
        throw InvalidArgument("accuracy of an empty query set");
    std::size_t hit = 0;
    for (auto const& s : states)
    {
        require_labels(s);
        if (s.best_index && *s.responses.at(*s.best_index).correct)
            ++hit;
    }
    return static_cast<double>(hit) / static_cast<double>(states.size());
}

std::optional<double> efficiency_gain(std::span<PerfPoint const> adaptive,
                                      std::span<PerfPoint const> baseline,
                                      double at_budget,
                                      Metric metric)
{
    validate_curve(adaptive, metric, "adaptive");
    validate_curve(baseline, metric, "baseline");
    if (at_budget < adaptive.front().budget || at_budget > adaptive.back().budget)
        throw InvalidArgument("efficiency_gain: budget " + std::to_string(at_budget)
                              + " lies outside the adaptive curve");

    double const v = interpolate_at(adaptive, at_budget, metric);
    auto baseline_budget = first_budget_reaching(baseline, v, metric);
    if (!baseline_budget)
        return std::nullopt;
    // On a plateau the adaptive curve already reached v before at_budget.
    double adaptive_budget = first_budget_reaching(adaptive, v, metric).value_or(at_budget);
    return *baseline_budget / adaptive_budget;
}

MeanStd mean_std(std::span<double const> values)
{
    if (values.empty())
        throw InvalidArgument("mean_std of an empty sample");
    double const n = static_cast<double>(values.size());
    double const mean = pairwise_sum(values) / n;
    std::vector<double> sq(values.size());
    for (std::size_t i = 0; i < values.size(); ++i)
        sq[i] = (values[i] - mean) * (values[i] - mean);
    return MeanStd{mean, std::sqrt(pairwise_sum(sq) / n)};
}

std::optional<double> relative_improvement(double adaptive, double baseline)
{
    if (baseline == 0.0)
        return std::nullopt;
    return (adaptive - baseline) / baseline;
}

}  // namespace ttc
