#include "ttc/oracle.hpp"

#include <string>

namespace ttc
{

bool exceeds_threshold(GenerationResult const& result, double gamma, double slack)
{
    return result.reward >= gamma - slack;
}

std::uint64_t oracle_call_count(RunTrace const& trace)
{
    return trace.oracle_calls;
}

void check_ground_truth(GenerationResult const& result, double gamma)
{
    if (result.reward != 0.0 && result.reward != 1.0)
        throw InvalidArgument("ground-truth reward must be 0 or 1, got " + std::to_string(result.reward));
    if (!result.correct)
        throw InvalidArgument("ground-truth result is missing its correctness bit");
    if (*result.correct != exceeds_threshold(result, gamma))
        throw InvalidArgument("ground-truth result disagrees with the threshold criterion");
}

ThresholdAgreement threshold_agreement(std::span<GenerationResult const> results,
                                       double gamma, double slack)
{
    ThresholdAgreement out;
    for (auto const& r : results)
    {
        if (!r.correct)
            continue;
        ++out.labelled;
        bool const over = exceeds_threshold(r, gamma, slack);
        if (over == *r.correct)
            continue;
        ++out.disagreements;
        if (over)
            ++out.false_accepts;
        else
            ++out.false_rejects;
    }
    return out;
}

}  // namespace ttc
