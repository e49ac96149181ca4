#pragma once

#include <cstdio>
#include <string>

#include "ks/vec3.hpp"

namespace ks {

// Doubles are emitted with 17 significant digits so every value round-trips
// exactly through text. nlohmann::json is used for parsing only; its dump()
// prints shortest representations, which is why emission is done by hand.
inline std::string fmt_double(double v) {
    if (v == 0.0) return "0"; // fold the sign of zero
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string json_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size() + 2);
    for (const char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            case '\r': out += "\\r"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof(buf), "\\u%04x", c);
                    out += buf;
                } else {
                    out += c;
                }
        }
    }
    return out;
}

inline std::string json_string(const std::string& s) {
    return "\"" + json_escape(s) + "\"";
}

inline std::string json_vector(const Vector3& v) {
    return "[" + fmt_double(v.x) + ", " + fmt_double(v.y) + ", " + fmt_double(v.z) + "]";
}

} // namespace ks
