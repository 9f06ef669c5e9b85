#pragma once

#include <cmath>
#include <ostream>
#include <string>

#include <json.hpp>

#include "retenta/csv.hpp"

namespace retenta::detail {

// Reals in report files go through the six-decimal text form so that the
// emitted JSON is stable across runs.
inline double round6(double v) {
    if (!std::isfinite(v)) return v;
    return *csv::parse_double(csv::format_fixed6(v));
}

// Same layout as nlohmann's dump(2), but floats are printed in shortest
// round-trip form.
template <class Json>
void write_json(std::ostream& out, const Json& j, int depth = 0) {
    const std::string pad(static_cast<std::size_t>(depth + 1) * 2, ' ');
    const std::string close_pad(static_cast<std::size_t>(depth) * 2, ' ');
    switch (j.type()) {
    case nlohmann::detail::value_t::object: {
        if (j.empty()) { out << "{}"; return; }
        out << "{\n";
        bool first = true;
        for (auto it = j.begin(); it != j.end(); ++it) {
            if (!first) out << ",\n";
            first = false;
            out << pad << Json(it.key()).dump() << ": ";
            write_json(out, it.value(), depth + 1);
        }
        out << '\n' << close_pad << '}';
        return;
    }
    case nlohmann::detail::value_t::array: {
        if (j.empty()) { out << "[]"; return; }
        out << "[\n";
        bool first = true;
        for (const auto& v : j) {
            if (!first) out << ",\n";
            first = false;
            out << pad;
            write_json(out, v, depth + 1);
        }
        out << '\n' << close_pad << ']';
        return;
    }
    case nlohmann::detail::value_t::number_float: {
        double v = j.template get<double>();
        if (!std::isfinite(v)) { out << "null"; return; }
        std::string s = csv::format_double(v);
        if (s.find_first_of(".eE") == std::string::npos) s += ".0";
        out << s;
        return;
    }
    default:
        out << j.dump();
    }
}

}  // namespace retenta::detail
