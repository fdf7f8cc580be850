#pragma once

#include <cmath>
#include <string>

#include <json.hpp>

#include "ttc/serialize.hpp"

namespace ttc::detail
{

/// Pretty-prints like json::dump(2) but writes floats with format_double so
/// every emitted number has 17 significant digits.
template <class Json>
void write_json(std::string& out, Json const& j, int indent = 0)
{
    auto pad = [&](int n) { out.append(static_cast<std::size_t>(n), ' '); };
    switch (j.type())
    {
        case nlohmann::json::value_t::object:
        {
            if (j.empty())
            {
                out += "{}";
                return;
            }
            out += "{\n";
            bool first = true;
            for (auto it = j.begin(); it != j.end(); ++it)
            {
                if (!first)
                    out += ",\n";
                first = false;
                pad(indent + 2);
                out += Json(it.key()).dump();
                out += ": ";
                write_json(out, it.value(), indent + 2);
            }
            out += "\n";
            pad(indent);
            out += "}";
            return;
        }
        case nlohmann::json::value_t::array:
        {
            if (j.empty())
            {
                out += "[]";
                return;
            }
            out += "[\n";
            bool first = true;
            for (auto const& v : j)
            {
                if (!first)
                    out += ",\n";
                first = false;
                pad(indent + 2);
                write_json(out, v, indent + 2);
            }
            out += "\n";
            pad(indent);
            out += "]";
            return;
        }
        case nlohmann::json::value_t::number_float:
        {
            double v = j.template get<double>();
            // JSON has no inf/nan literals.
            out += std::isfinite(v) ? format_double(v) : "null";
            return;
        }
        default: out += j.dump(); return;
    }
}

template <class Json>
std::string to_json_text(Json const& j)
{
    std::string out;
    write_json(out, j);
    out += "\n";
    return out;
}

}  // namespace ttc::detail
