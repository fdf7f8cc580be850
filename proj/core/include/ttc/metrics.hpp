#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ttc/types.hpp"

namespace ttc
{

class CoverageUnavailable : public Error
{
  public:
    explicit CoverageUnavailable(std::string const& query_id)
        : Error("query '" + query_id + "' has a response without a ground-truth correctness bit")
    {
    }
};

struct PerfPoint
{
    double budget = 0.0;
    double coverage = 0.0;
    double accuracy = 0.0;
};

/// Fraction of queries with at least one correct response.
double coverage(std::span<QueryState const> states);

/// Fraction of queries whose best-scoring response is correct; N = 0 counts as wrong.
double accuracy(std::span<QueryState const> states);

enum class Metric
{
    coverage,
    accuracy,
};

/// Budget multiple the baseline needs to match the adaptive curve's metric at
/// at_budget. Both curves are read with linear interpolation on the budget
/// axis. nullopt when the baseline never reaches that value.
std::optional<double> efficiency_gain(std::span<PerfPoint const> adaptive,
                                      std::span<PerfPoint const> baseline,
                                      double at_budget,
                                      Metric metric);

struct MeanStd
{
    double mean = 0.0;
    double stddev = 0.0;  // population standard deviation

    double lower_half_band() const { return mean - 0.5 * stddev; }
    double upper_half_band() const { return mean + 0.5 * stddev; }
};

/// Mean and population standard deviation, summed pairwise in index order.
MeanStd mean_std(std::span<double const> values);

/// (adaptive - baseline) / baseline; nullopt when baseline is zero.
std::optional<double> relative_improvement(double adaptive, double baseline);

}  // namespace ttc
