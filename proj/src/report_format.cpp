#include "causeway/report_format.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

namespace causeway {

std::string format_p_value(double p) {
    if (p < 2.2e-16) return "p<2.2E-16";
    char buf[32];
    if (p < 0.001) {
        std::snprintf(buf, sizeof buf, "p=%.2E", p);
        return buf;
    }
    std::snprintf(buf, sizeof buf, "%.3f", p);
    std::string s = buf;
    while (s.back() == '0') s.pop_back();
    if (s.back() == '.') s.pop_back();
    return "p=" + s;
}

std::string format_fixed3(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

std::string format_exact(double v) {
    if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

}  // namespace causeway
