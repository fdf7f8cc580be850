#pragma once

#include <cstdint>
#include <span>

#include "ttc/allocator.hpp"
#include "ttc/types.hpp"

namespace ttc
{

enum class OracleKind
{
    ground_truth,  // rewards are exactly 0 or 1
    scored,        // learned scorer; the threshold criterion holds only approximately
};

struct Oracle
{
    OracleKind kind = OracleKind::ground_truth;
    double gamma_slack = 0.0;
};

/// reward >= gamma - slack.
bool exceeds_threshold(GenerationResult const& result, double gamma, double slack = 0.0);

/// One reward-oracle call per scored generation.
std::uint64_t oracle_call_count(RunTrace const& trace);

/// Throws InvalidArgument if a result breaks the ground-truth contract
/// (reward not in {0, 1}, or correct disagreeing with reward >= gamma).
void check_ground_truth(GenerationResult const& result, double gamma);

struct ThresholdAgreement
{
    std::uint64_t labelled = 0;   // results carrying a correctness bit
    std::uint64_t disagreements = 0;
    std::uint64_t false_accepts = 0;  // over threshold but incorrect
    std::uint64_t false_rejects = 0;  // correct but under threshold

    double disagreement_rate() const
    {
        return labelled == 0 ? 0.0 : static_cast<double>(disagreements) / static_cast<double>(labelled);
    }
};

/// How often exceeds_threshold disagrees with ground truth over a set of results.
ThresholdAgreement threshold_agreement(std::span<GenerationResult const> results,
                                       double gamma, double slack = 0.0);

}  // namespace ttc
