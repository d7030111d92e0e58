#pragma once

#include <cmath>

#include "v2i/errors.hpp"

namespace v2i {

struct Position {
    double x = 0;
    double y = 0;
};

inline double distance(const Position& a, const Position& b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

/// Concentric monitoring areas around a managed intersection.
struct ZoneSpec {
    Position center;
    double control_radius = 300.0;
    double surveillance_radius = 500.0;
};

enum class Zone { Control, Surveillance, Outside };

inline const char* zone_name(Zone z) {
    switch (z) {
        case Zone::Control: return "control";
        case Zone::Surveillance: return "surveillance";
        case Zone::Outside: return "outside";
    }
    return "?";
}

/// Classifies a point against the zone rings; a point exactly on a radius
/// belongs to the inner zone.
inline Zone zone_of(const Position& p, const ZoneSpec& z) {
    const double d = distance(p, z.center);
    if (d <= z.control_radius) return Zone::Control;
    if (d <= z.surveillance_radius) return Zone::Surveillance;
    return Zone::Outside;
}

}  // namespace v2i
