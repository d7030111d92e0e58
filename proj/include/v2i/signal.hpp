#pragma once

#include <cmath>
#include <map>
#include <set>
#include <utility>
#include <vector>

#include "v2i/errors.hpp"

namespace v2i {

enum class LightColor { Green, Yellow, Red };

inline char color_letter(LightColor c) {
    switch (c) {
        case LightColor::Green: return 'G';
        case LightColor::Yellow: return 'Y';
        case LightColor::Red: return 'R';
    }
    return '?';
}

inline LightColor color_from_letter(char ch) {
    switch (ch) {
        case 'G': case 'g': return LightColor::Green;
        case 'Y': case 'y': return LightColor::Yellow;
        case 'R': case 'r': return LightColor::Red;
    }
    fail(Errc::invalid_value, std::string("unknown signal color '") + ch + "'");
}

/// One step of a signal program. Approaches are entry-lane indices; an
/// approach missing from the map shows Red for the phase.
struct Phase {
    std::map<int, LightColor> colors;
    double duration = 0;
};

struct SignalProgram {
    std::vector<Phase> phases;

    double cycle() const {
        double c = 0;
        for (const auto& p : phases) c += p.duration;
        return c;
    }

    const Phase& phase_at(double anchor, double time) const {
        double local = std::fmod(time - anchor, cycle());
        if (local < 0) local += cycle();
        for (const auto& p : phases) {
            if (local < p.duration) return p;
            local -= p.duration;
        }
        return phases.back();  // local == cycle() after fp rounding
    }
};

/// Runtime light state for one junction: a scheduled program plus an
/// override mode used by dynamic control.
struct TrafficLightState {
    int junction = -1;
    SignalProgram program;
    double schedule_anchor = 0;
    std::set<int> approaches;
    std::vector<std::pair<int, int>> conflicts;  // symmetric pairs of approach lanes

    bool overridden = false;
    std::map<int, LightColor> override_colors;
};

inline LightColor phase_color(const Phase& phase, int approach) {
    auto it = phase.colors.find(approach);
    return it == phase.colors.end() ? LightColor::Red : it->second;
}

inline LightColor color_for(const TrafficLightState& tl, int approach, double time) {
    if (!tl.approaches.count(approach))
        fail(Errc::unknown_approach, "approach lane #" + std::to_string(approach) +
                                     " not at junction #" + std::to_string(tl.junction));
    if (tl.overridden) {
        return tl.override_colors.at(approach);
    }
    return phase_color(tl.program.phase_at(tl.schedule_anchor, time), approach);
}

/// Switches the light to a fixed color map. The map must cover every
/// approach and may not show Green to both sides of a declared conflict.
inline void set_override(TrafficLightState& tl, const std::map<int, LightColor>& colors) {
    for (int a : tl.approaches) {
        if (!colors.count(a))
            fail(Errc::incomplete_color_map,
                 "override misses approach lane #" + std::to_string(a));
    }
    for (const auto& [a, b] : tl.conflicts) {
        if (colors.count(a) && colors.count(b) &&
            colors.at(a) == LightColor::Green && colors.at(b) == LightColor::Green) {
            fail(Errc::conflicting_green,
                 "override greens conflicting approaches #" + std::to_string(a) + "/#" +
                     std::to_string(b));
        }
    }
    tl.overridden = true;
    tl.override_colors = colors;
}

/// Returns to the scheduled program, resuming at the phase the schedule
/// dictates for absolute `time` (time-synced, not pause-resume).
inline void clear_override(TrafficLightState& tl, double time) {
    (void)time;  // static colors are a pure function of absolute time
    if (!tl.overridden) fail(Errc::not_in_override, "junction #" + std::to_string(tl.junction));
    tl.overridden = false;
    tl.override_colors.clear();
}

/// No phase may show Green to both ends of a conflict pair.
inline void validate_program(const SignalProgram& program,
                             const std::vector<std::pair<int, int>>& conflicts) {
    if (program.phases.empty()) fail(Errc::invalid_value, "signal program has no phases");
    for (const auto& p : program.phases) {
        if (p.duration <= 0) fail(Errc::invalid_value, "phase duration must be > 0");
        if (p.colors.empty()) fail(Errc::invalid_value, "phase lists no approach");
        for (const auto& [a, b] : conflicts) {
            if (phase_color(p, a) == LightColor::Green && phase_color(p, b) == LightColor::Green)
                fail(Errc::conflicting_green, "phase greens conflicting approaches #" +
                                                  std::to_string(a) + "/#" + std::to_string(b));
        }
    }
}

/// Builds the fallback program for a junction that declares none: greens
/// split across non-conflicting approach groups proportionally to demand,
/// 3 s yellows, 2 s clearance gaps, 90 s total cycle.
inline SignalProgram default_program(const std::vector<int>& approaches,
                                     const std::vector<std::pair<int, int>>& conflicts,
                                     const std::map<int, double>& demand_share) {
    // greedy grouping into mutually compatible approach sets
    std::vector<std::vector<int>> groups;
    auto conflicting = [&](int a, int b) {
        for (const auto& [x, y] : conflicts)
            if ((x == a && y == b) || (x == b && y == a)) return true;
        return false;
    };
    for (int a : approaches) {
        bool placed = false;
        for (auto& g : groups) {
            bool ok = true;
            for (int m : g)
                if (conflicting(a, m)) { ok = false; break; }
            if (ok) {
                g.push_back(a);
                placed = true;
                break;
            }
        }
        if (!placed) groups.push_back({a});
    }

    const double cycle = 90.0;
    const double yellow = 3.0;
    const double clearance = 2.0;
    double green_budget = cycle - groups.size() * (yellow + clearance);

    std::vector<double> share(groups.size(), 0);
    double total = 0;
    for (size_t i = 0; i < groups.size(); ++i) {
        for (int a : groups[i]) {
            auto it = demand_share.find(a);
            share[i] += it == demand_share.end() ? 1.0 : it->second;
        }
        if (share[i] <= 0) share[i] = 1.0;
        total += share[i];
    }

    SignalProgram prog;
    for (size_t i = 0; i < groups.size(); ++i) {
        double green = std::max(5.0, green_budget * share[i] / total);
        Phase g, y, r;
        g.duration = green;
        y.duration = yellow;
        r.duration = clearance;
        for (int a : approaches) {
            bool mine = false;
            for (int m : groups[i]) mine |= (m == a);
            g.colors[a] = mine ? LightColor::Green : LightColor::Red;
            y.colors[a] = mine ? LightColor::Yellow : LightColor::Red;
            r.colors[a] = LightColor::Red;
        }
        prog.phases.push_back(g);
        prog.phases.push_back(y);
        prog.phases.push_back(r);
    }
    return prog;
}

}  // namespace v2i
