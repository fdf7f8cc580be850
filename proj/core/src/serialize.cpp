#include "ttc/serialize.hpp"

#include <cmath>
#include <cstdio>

namespace ttc
{

std::string format_double(double v)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    // Guard against a locale with ',' as the decimal separator.
    for (char* p = buf; *p; ++p)
        if (*p == ',')
            *p = '.';
    return buf;
}

std::string format_optional(std::optional<double> v)
{
    return v ? format_double(*v) : std::string{};
}

void write_trace_csv(std::ostream& out, RunTrace const& trace)
{
    out << trace_csv_header << '\n';
    for (auto const& row : trace.rows)
    {
        out << row.round << ',' << row.spent << ',' << row.active_count << ','
            << format_optional(row.coverage) << ',' << format_optional(row.accuracy) << '\n';
    }
}

}  // namespace ttc
