#pragma once

#include <cstdio>
#include <optional>
#include <string>

namespace flexlens {

/// Round-trip serialization used in every CSV: 17 significant digits.
inline std::string fmt_num(double v) {
    if (v == 0.0) return "0";  // folds -0
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string fmt_num(const std::optional<double>& v) { return v ? fmt_num(*v) : "null"; }

/// Display rounding for the human report only.
inline std::string fmt_fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

inline std::string fmt_fixed(const std::optional<double>& v, int decimals) {
    return v ? fmt_fixed(*v, decimals) : "n/a";
}

}  // namespace flexlens
