#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "v2i/errors.hpp"
#include "v2i/geometry.hpp"
#include "v2i/signal.hpp"

namespace v2i {

constexpr double kSlotLength = 5.0;        // m per queued vehicle (length + minimal gap)
constexpr double kPoolFootprint = 8.0;     // m^2 per vehicle inside a junction pool
constexpr double kStopMargin = 1.0;        // m a vehicle keeps before a stop position

/// Queued vehicles a lane can hold: floor(length / slot).
inline int max_occupancy(double length, double slot = kSlotLength) {
    if (length < 0) fail(Errc::invalid_value, "negative lane length");
    return static_cast<int>(std::floor(length / slot));
}

/// Vehicles a junction interior can hold: floor(area / footprint).
inline int pool_capacity(double area, double footprint = kPoolFootprint) {
    if (area <= 0) fail(Errc::invalid_value, "pool area must be > 0");
    return static_cast<int>(std::floor(area / footprint));
}

/// Half the pool capacity, floored — the gating trigger level.
inline int occupation_threshold(int capacity) {
    if (capacity < 0) fail(Errc::invalid_value, "negative capacity");
    return capacity / 2;
}

/// A signalized crossing along a lane. The interval [stop_offset,
/// interior_end] is the slice of junction interior the lane runs through.
struct Crossing {
    int junction = -1;
    double stop_offset = 0;
    double interior_end = 0;
};

struct Lane {
    std::string id;
    int from_junction = -1;
    int to_junction = -1;
    double length = 0;
    double approach_angle = 0;  // radians, direction of travel
    double speed_limit = std::numeric_limits<double>::infinity();
    int max_occ = 0;
    int parallel = -1;  // neighbouring lane usable for advisory lane changes
    std::vector<Crossing> crossings;
    Position start;

    const Crossing* crossing_at(int junction) const {
        for (const auto& c : crossings)
            if (c.junction == junction) return &c;
        return nullptr;
    }
};

/// Along-lane offset of the point nearest to `p` (clamped to the lane).
inline double offset_of_nearest(const Lane& lane, const Position& p) {
    const double t = (p.x - lane.start.x) * std::cos(lane.approach_angle) +
                     (p.y - lane.start.y) * std::sin(lane.approach_angle);
    return std::clamp(t, 0.0, lane.length);
}

/// Planar position `offset` metres along a lane's straight segment.
inline Position locate(const Lane& lane, double offset) {
    if (offset < 0 || offset > lane.length)
        fail(Errc::offset_out_of_range,
             lane.id + ": offset " + std::to_string(offset) + " not in [0, " +
                 std::to_string(lane.length) + "]");
    return {lane.start.x + offset * std::cos(lane.approach_angle),
            lane.start.y + offset * std::sin(lane.approach_angle)};
}

struct PoolInterval {
    int lane = -1;
    double begin = 0;  // == crossing stop_offset
    double end = 0;    // == crossing interior_end
};

struct Pool {
    double area = 0;
    int capacity = 0;  // == pool_capacity(area)
    std::vector<PoolInterval> intervals;
};

struct Junction {
    std::string id;
    Position center;
    std::optional<Pool> pool;
    std::vector<int> approaches;                  // entry lanes, in declaration order
    std::vector<std::pair<int, int>> conflicts;   // symmetric pairs of approach lanes
    std::optional<SignalProgram> program;
    double schedule_anchor = 0;
    int zone = 0;  // index into Network::zones

    bool signalized() const { return program.has_value(); }
};

struct Route {
    std::string id;
    int source_junction = -1;
    int dest_junction = -1;
    std::vector<int> lanes;
};

enum class DetectorKind { Entry, Exit };

struct Detector {
    std::string id;
    int lane = -1;
    double offset = 0;
    DetectorKind kind = DetectorKind::Entry;
};

struct Network {
    std::vector<ZoneSpec> zones;
    std::vector<Junction> junctions;
    std::vector<Lane> lanes;
    std::vector<Route> routes;
    std::vector<Detector> detectors;

    std::unordered_map<std::string, int> junction_index;
    std::unordered_map<std::string, int> lane_index;
    std::unordered_map<std::string, int> route_index;

    int junction_of(const std::string& id) const {
        auto it = junction_index.find(id);
        if (it == junction_index.end()) fail(Errc::dangling_reference, "unknown junction " + id);
        return it->second;
    }
    int lane_of(const std::string& id) const {
        auto it = lane_index.find(id);
        if (it == lane_index.end()) fail(Errc::dangling_reference, "unknown lane " + id);
        return it->second;
    }
    int route_of(const std::string& id) const {
        auto it = route_index.find(id);
        if (it == route_index.end()) fail(Errc::dangling_reference, "unknown route " + id);
        return it->second;
    }
};

/// Config-declared conflict set of an approach; symmetric by construction.
inline std::set<int> conflicting_approaches(const Junction& junction, int approach) {
    bool known = false;
    for (int a : junction.approaches) known |= (a == approach);
    if (!known)
        fail(Errc::unknown_approach,
             "lane #" + std::to_string(approach) + " is not an approach of " + junction.id);
    std::set<int> out;
    for (const auto& [a, b] : junction.conflicts) {
        if (a == approach) out.insert(b);
        if (b == approach) out.insert(a);
    }
    return out;
}

}  // namespace v2i
