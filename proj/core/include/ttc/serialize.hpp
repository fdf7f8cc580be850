#pragma once

#include <optional>
#include <ostream>
#include <string>

#include "ttc/allocator.hpp"

namespace ttc
{

/// printf("%.17g"), with "inf", "-inf" and "nan" spelled out. Locale-independent.
std::string format_double(double v);

/// Empty string for a missing value.
std::string format_optional(std::optional<double> v);

inline constexpr char const* trace_csv_header = "round,spent,active_count,coverage,accuracy";

/// One header line plus one line per trace row, '\n'-terminated.
void write_trace_csv(std::ostream& out, RunTrace const& trace);

}  // namespace ttc
