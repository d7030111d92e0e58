#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "v2i/scenario.hpp"

namespace v2i {

constexpr double kStandstillSpeed = 0.1;   // m/s, below this a vehicle counts as stopped
constexpr double kFoulSpeed = 1.0;         // m/s, below this a body fouls the junction interior
constexpr double kLookaheadHorizon = 150;  // m of cross-lane leader / stop-line search
constexpr double kJamLookahead = 100.0;    // m, default jam detection window
constexpr double kJamSpeed = 2.0;          // m/s mean speed that counts as a jam

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline double uniform01(std::uint64_t x) { return (x >> 11) * 0x1.0p-53; }

struct Vehicle {
    int id = -1;
    VehicleKind kind = VehicleKind::Passenger;
    VehicleParams params;
    int route = -1;
    int chain_pos = 0;   // index into the route's lane chain
    int lane = -1;       // actual lane: the chain lane or its parallel
    int prev_lane = -1;  // lane the rear bumper still spills into
    double offset = 0;   // front bumper, metres from lane start
    double speed = 0;
    double depart = 0;
    std::optional<double> arrive;
    double v_desired = 0;
    bool app_active = true;
    bool registered = false;
    bool held = false;
    bool hold_release_pending = false;
    int hold_junction = -1;
    int pending_lane_change = -1;
};

/// Trajectory sample, quantized (ms, mm, mm/s) so that the trace file
/// round-trips bit-exactly and metrics are identical on replay.
struct TraceSample {
    std::int64_t time_ms = 0;
    int vehicle = -1;
    int lane = -1;
    std::int64_t offset_mm = 0;
    std::int64_t speed_mms = 0;
    bool held = false;

    double time() const { return time_ms / 1000.0; }
    double offset() const { return offset_mm / 1000.0; }
    double speed() const { return speed_mms / 1000.0; }
};

struct DetectorEvent {
    int detector = -1;
    int vehicle = -1;
    double time = 0;
};

struct FlowSchedule {
    std::vector<std::int64_t> spawn_ticks;  // sorted
    int next = 0;
};

struct WorldState {
    double time = 0;
    std::int64_t tick = 0;
    double dt = 0.5;

    std::vector<Vehicle> vehicles;                 // by id, arrived ones kept
    std::vector<char> active;
    std::vector<std::vector<int>> lane_vehicles;   // per lane, sorted by offset desc

    std::vector<TrafficLightState> lights;
    std::vector<int> light_of_junction;            // junction -> light index or -1

    std::vector<FlowSchedule> schedule;
    std::vector<std::int64_t> detector_counts;
    std::vector<DetectorEvent> events_last_tick;

    int spawned = 0;
    int arrived_count = 0;

    std::vector<TraceSample> trace;
    std::vector<double> stationary_since;          // per vehicle

    bool deadlock = false;
    double deadlock_time = -1;
    std::vector<int> max_pool_occ;                 // per junction

    // speed already fixed for the current step (scratch)
    std::vector<double> next_speeds;
};

/// Krauss safe approach speed toward a leader. May be negative; callers
/// clamp at zero.
inline double krauss_safe_speed(double v_follower, double v_leader, double gap,
                                const VehicleParams& p) {
    return v_leader + (gap - v_leader * p.tau) /
                          ((v_follower + v_leader) / (2.0 * p.decel) + p.tau);
}

struct LeaderInfo {
    double speed = 0;
    double gap = 0;
};

/// One-tick speed update. Stop positions (red lights, hold points, fouled
/// interiors) enter as a stationary leader one margin short of the line.
inline double next_speed(const Vehicle& veh, std::optional<LeaderInfo> leader,
                         std::optional<double> stop_distance, double dt,
                         double v_cap = -1.0) {
    const VehicleParams& p = veh.params;
    if (v_cap < 0) v_cap = p.v_max;
    double v = std::min(veh.speed + p.accel * dt, v_cap);
    if (leader) v = std::min(v, krauss_safe_speed(veh.speed, leader->speed, leader->gap, p));
    if (stop_distance)
        v = std::min(v, krauss_safe_speed(veh.speed, 0.0, *stop_distance - kStopMargin, p));
    return std::max(0.0, v);
}

/// Vehicles whose front bumper lies inside any interior interval of the
/// junction's pool.
inline int pool_occupancy(const WorldState& world, const ScenarioConfig& cfg, int junction) {
    const Junction& j = cfg.network.junctions[junction];
    if (!j.pool) fail(Errc::invalid_value, j.id + " has no pool");
    int count = 0;
    for (const PoolInterval& iv : j.pool->intervals) {
        for (int vi : world.lane_vehicles[iv.lane]) {
            const Vehicle& v = world.vehicles[vi];
            if (v.offset >= iv.begin && v.offset < iv.end) ++count;
        }
    }
    return count;
}

namespace detail {

/// True when a stopped or crawling vehicle body overlaps the geometric
/// crossing core [core_begin, core_end] on `lane` (including rear spill
/// from a vehicle just past the lane seam).
inline bool core_fouled(const WorldState& world, const ScenarioConfig& cfg, int lane,
                        double core_begin, double core_end) {
    for (int vi : world.lane_vehicles[lane]) {
        const Vehicle& v = world.vehicles[vi];
        if (v.speed >= kFoulSpeed) continue;
        const double rear = v.offset - v.params.length;
        if (v.offset > core_begin && rear < core_end) return true;
    }
    for (size_t li = 0; li < world.lane_vehicles.size(); ++li) {
        for (int vi : world.lane_vehicles[li]) {
            const Vehicle& v = world.vehicles[vi];
            if (v.prev_lane != lane || v.speed >= kFoulSpeed) continue;
            const double spill = v.params.length - v.offset;
            if (spill <= 0) continue;
            if (cfg.network.lanes[lane].length - spill < core_end) return true;
        }
    }
    return false;
}

}  // namespace detail

/// Per-approach "do not enter" flags for a junction whose crossing core
/// (a sqrt(area)-sided square around the junction centre) holds a stuck
/// vehicle from a conflicting stream. Mode-independent physics: drivers
/// do not enter a box a crossing stream is stuck in.
inline std::vector<char> blocked_approaches(const WorldState& world, const ScenarioConfig& cfg,
                                            int junction) {
    const Junction& j = cfg.network.junctions[junction];
    std::vector<char> blocked(cfg.network.lanes.size(), 0);
    if (!j.pool) return blocked;
    const double half = std::sqrt(j.pool->area) / 2.0;
    std::vector<char> fouled(cfg.network.lanes.size(), 0);
    for (int a : j.approaches) {
        const double core = offset_of_nearest(cfg.network.lanes[a], j.center);
        fouled[a] = detail::core_fouled(world, cfg, a, core - half, core + half);
    }
    for (int a : j.approaches) {
        for (const auto& [x, y] : j.conflicts) {
            if (x == a && fouled[y]) blocked[a] = 1;
            if (y == a && fouled[x]) blocked[a] = 1;
        }
    }
    return blocked;
}

/// True when at least three vehicles within `lookahead` ahead on the same
/// lane crawl below the jam speed on average.
inline bool jam_ahead(const WorldState& world, const ScenarioConfig& cfg, const Vehicle& veh,
                      double lookahead = kJamLookahead) {
    (void)cfg;
    int count = 0;
    double speed_sum = 0;
    for (int vi : world.lane_vehicles[veh.lane]) {
        const Vehicle& other = world.vehicles[vi];
        if (other.id == veh.id) continue;
        if (other.offset > veh.offset && other.offset <= veh.offset + lookahead) {
            ++count;
            speed_sum += other.speed;
        }
    }
    return count >= 3 && speed_sum / count < kJamSpeed;
}

/// Moves a vehicle onto the declared parallel lane at the same offset if
/// the landing slot is free (1 m bumper gap fore and aft). Returns false
/// and leaves the world unchanged when the slot is occupied.
inline bool apply_lane_change(WorldState& world, const ScenarioConfig& cfg, int vehicle_id,
                              int target_lane) {
    Vehicle& veh = world.vehicles[vehicle_id];
    const Lane& cur = cfg.network.lanes[veh.lane];
    if (cur.parallel != target_lane)
        fail(Errc::no_parallel_lane, "lane " + cur.id + " has no parallel lane #" +
                                         std::to_string(target_lane));
    if (veh.offset < veh.params.length) return false;  // rear still on the previous lane
    for (int vi : world.lane_vehicles[target_lane]) {
        const Vehicle& other = world.vehicles[vi];
        if (other.offset >= veh.offset) {
            if (other.offset - other.params.length - veh.offset < 1.0) return false;
        } else {
            if (veh.offset - veh.params.length - other.offset < 1.0) return false;
        }
    }
    auto& from = world.lane_vehicles[veh.lane];
    from.erase(std::find(from.begin(), from.end(), vehicle_id));
    veh.lane = target_lane;
    veh.prev_lane = -1;
    auto& to = world.lane_vehicles[target_lane];
    to.insert(std::upper_bound(to.begin(), to.end(), vehicle_id,
                               [&](int a, int b) {
                                   const Vehicle& va = world.vehicles[a];
                                   const Vehicle& vb = world.vehicles[b];
                                   if (va.offset != vb.offset) return va.offset > vb.offset;
                                   return va.id < vb.id;
                               }),
              vehicle_id);
    return true;
}

/// Trace-window deadlock test: at the window's last tick, at least
/// `min_vehicles` are inside the surveillance zone and every zone vehicle
/// has been present and below standstill speed for the whole window.
inline bool detect_deadlock(const std::vector<TraceSample>& window, const Network& net,
                            const ZoneSpec& zone, int min_vehicles = 3, double window_s = 60.0) {
    if (window.empty()) return false;
    std::int64_t t_end = 0;
    for (const TraceSample& s : window) t_end = std::max(t_end, s.time_ms);
    const std::int64_t t_begin = t_end - static_cast<std::int64_t>(window_s * 1000);

    struct Hist {
        std::int64_t first = -1;
        bool always_slow = true;
        bool in_zone_at_end = false;
        std::int64_t last = -1;
    };
    std::map<int, Hist> hist;
    for (const TraceSample& s : window) {
        if (s.time_ms < t_begin) continue;
        Hist& h = hist[s.vehicle];
        if (h.first < 0 || s.time_ms < h.first) h.first = s.time_ms;
        if (s.time_ms > h.last) {
            h.last = s.time_ms;
            const Position p = locate(net.lanes[s.lane], std::min(s.offset(), net.lanes[s.lane].length));
            h.in_zone_at_end = zone_of(p, zone) != Zone::Outside;
        }
        if (s.speed() >= kStandstillSpeed) h.always_slow = false;
    }
    int count = 0;
    for (const auto& [veh, h] : hist) {
        if (h.last != t_end || !h.in_zone_at_end) continue;  // not in the zone now
        if (!h.always_slow || h.first > t_begin) return false;
        ++count;
    }
    return count >= min_vehicles;
}

/// Builds per-flow spawn schedules (fixed headway, optional seeded ±10 %
/// jitter), quantized to ticks.
inline std::vector<FlowSchedule> build_schedule(const ScenarioConfig& cfg, std::uint64_t seed) {
    std::vector<FlowSchedule> out;
    for (size_t fi = 0; fi < cfg.flows.size(); ++fi) {
        const DemandFlow& f = cfg.flows[fi];
        FlowSchedule fs;
        for (int i = 0; i < f.count; ++i) {
            double t = f.start + i * f.headway;
            if (f.jitter) {
                const std::uint64_t h = splitmix64(seed ^ splitmix64((fi + 1) * 0x9e37ull + i));
                t += (uniform01(h) * 2.0 - 1.0) * 0.1 * f.headway;
            }
            t = std::max(0.0, t);
            fs.spawn_ticks.push_back(static_cast<std::int64_t>(std::ceil(t / cfg.sim.dt - 1e-9)));
        }
        std::sort(fs.spawn_ticks.begin(), fs.spawn_ticks.end());
        out.push_back(std::move(fs));
    }
    return out;
}

inline WorldState make_world(const ScenarioConfig& cfg, std::uint64_t seed) {
    WorldState w;
    w.dt = cfg.sim.dt;
    const Network& net = cfg.network;
    w.lane_vehicles.resize(net.lanes.size());
    w.light_of_junction.assign(net.junctions.size(), -1);
    for (size_t ji = 0; ji < net.junctions.size(); ++ji) {
        const Junction& j = net.junctions[ji];
        if (!j.program) continue;
        TrafficLightState tl;
        tl.junction = static_cast<int>(ji);
        tl.program = *j.program;
        tl.schedule_anchor = j.schedule_anchor;
        tl.approaches.insert(j.approaches.begin(), j.approaches.end());
        tl.conflicts = j.conflicts;
        w.light_of_junction[ji] = static_cast<int>(w.lights.size());
        w.lights.push_back(std::move(tl));
    }
    w.schedule = build_schedule(cfg, seed);
    w.detector_counts.assign(net.detectors.size(), 0);
    w.max_pool_occ.assign(net.junctions.size(), 0);
    return w;
}

namespace detail {

inline int route_next_lane(const Network& net, const Vehicle& veh) {
    const Route& r = net.routes[veh.route];
    if (veh.chain_pos + 1 >= static_cast<int>(r.lanes.size())) return -1;
    return r.lanes[veh.chain_pos + 1];
}

/// Nearest leader ahead: same lane first, then along the route chain up
/// to the horizon.
inline std::optional<LeaderInfo> find_leader(const WorldState& world, const Network& net,
                                             const Vehicle& veh) {
    const auto& mine = world.lane_vehicles[veh.lane];
    const Vehicle* best = nullptr;
    for (int vi : mine) {
        const Vehicle& o = world.vehicles[vi];
        if (o.id == veh.id || o.offset < veh.offset ||
            (o.offset == veh.offset && o.id >= veh.id))
            continue;
        if (!best || o.offset < best->offset) best = &o;
    }
    if (best)
        return LeaderInfo{best->speed, best->offset - best->params.length - veh.offset};

    double ahead = net.lanes[veh.lane].length - veh.offset;
    int pos = veh.chain_pos;
    const Route& r = net.routes[veh.route];
    while (ahead < kLookaheadHorizon && pos + 1 < static_cast<int>(r.lanes.size())) {
        ++pos;
        const int li = r.lanes[pos];
        const Vehicle* rear = nullptr;
        for (int vi : world.lane_vehicles[li]) {
            const Vehicle& o = world.vehicles[vi];
            if (!rear || o.offset < rear->offset) rear = &o;
        }
        if (rear)
            return LeaderInfo{rear->speed, ahead + rear->offset - rear->params.length};
        ahead += net.lanes[li].length;
    }
    return std::nullopt;
}

struct StopScan {
    std::optional<double> hard;  // red light, fouled box, hold point
    std::optional<double> soft;  // yellow: obey only if braking stays comfortable
};

inline void merge_stop(std::optional<double>& slot, double dist) {
    if (!slot || dist < *slot) slot = dist;
}

/// Collects stop-line constraints ahead of the vehicle on its current
/// lane and along the chain within the horizon.
inline StopScan scan_stops(const WorldState& world, const ScenarioConfig& cfg,
                           const Vehicle& veh,
                           const std::vector<std::vector<char>>& blocked_by_junction) {
    StopScan out;
    const Network& net = cfg.network;
    const Route& r = net.routes[veh.route];

    double base = 0;
    int lane = veh.lane;
    int pos = veh.chain_pos;
    double from_offset = veh.offset;
    while (true) {
        for (const Crossing& c : net.lanes[lane].crossings) {
            if (c.stop_offset <= from_offset) continue;  // committed or behind
            const double d = base + (c.stop_offset - from_offset);
            if (d > kLookaheadHorizon) continue;
            const int light = world.light_of_junction[c.junction];
            if (light >= 0) {
                const LightColor col = color_for(world.lights[light], lane, world.time);
                if (col == LightColor::Red) merge_stop(out.hard, d);
                else if (col == LightColor::Yellow) merge_stop(out.soft, d);
            }
            if (blocked_by_junction[c.junction].size() &&
                blocked_by_junction[c.junction][lane])
                merge_stop(out.hard, d);
            if (veh.held && veh.hold_junction == c.junction) merge_stop(out.hard, d);
        }
        base += net.lanes[lane].length - from_offset;
        if (base > kLookaheadHorizon || pos + 1 >= static_cast<int>(r.lanes.size())) break;
        ++pos;
        lane = r.lanes[pos];
        from_offset = 0;
    }
    return out;
}

}  // namespace detail

/// One dt tick of physics: speeds from the current snapshot, then moves,
/// lane transitions, arrivals, detector events, demand spawns, trace
/// samples, deadlock bookkeeping.
inline void step(WorldState& world, const ScenarioConfig& cfg) {
    const Network& net = cfg.network;
    const double dt = cfg.sim.dt;
    const double t_new = world.time + dt;

    // interior blocking flags per junction (snapshot-based)
    std::vector<std::vector<char>> blocked(net.junctions.size());
    for (size_t ji = 0; ji < net.junctions.size(); ++ji)
        if (net.junctions[ji].pool)
            blocked[ji] = blocked_approaches(world, cfg, static_cast<int>(ji));

    // (1) speeds from snapshot, front-to-back per lane, lanes in id order
    world.next_speeds.assign(world.vehicles.size(), 0.0);
    for (size_t li = 0; li < net.lanes.size(); ++li) {
        for (int vi : world.lane_vehicles[li]) {
            const Vehicle& veh = world.vehicles[vi];
            const auto leader = detail::find_leader(world, net, veh);
            const auto stops = detail::scan_stops(world, cfg, veh, blocked);
            const double cap = std::min(veh.params.v_max, net.lanes[li].speed_limit);
            double v = next_speed(veh, leader, stops.hard, dt, cap);
            if (stops.soft) {
                const double v_y = next_speed(veh, leader, stops.soft, dt, cap);
                if (v_y >= veh.speed - veh.params.decel * dt) v = std::min(v, v_y);
            }
            world.next_speeds[vi] = v;
        }
    }

    // (2)-(5) moves, transitions, arrivals, detector events
    world.events_last_tick.clear();
    std::vector<int> arrivals;
    for (size_t li = 0; li < net.lanes.size(); ++li) {
        for (int vi : world.lane_vehicles[li]) {
            Vehicle& veh = world.vehicles[vi];
            const double v = world.next_speeds[vi];
            double advance = v * dt;
            veh.speed = v;
            double off = veh.offset;
            int lane = veh.lane;
            while (advance > 0 || off >= net.lanes[lane].length) {
                const double remaining = net.lanes[lane].length - off;
                const double seg = std::min(advance, remaining);
                const double new_off = off + seg;
                for (size_t di = 0; di < net.detectors.size(); ++di) {
                    const Detector& d = net.detectors[di];
                    if (d.lane != lane) continue;
                    if (off < d.offset && d.offset <= new_off) {
                        ++world.detector_counts[di];
                        world.events_last_tick.push_back({static_cast<int>(di), veh.id, t_new});
                    }
                }
                off = new_off;
                advance -= seg;
                if (off < net.lanes[lane].length) break;
                // lane completed
                const int next = detail::route_next_lane(net, veh);
                if (next < 0) {
                    veh.arrive = t_new;
                    arrivals.push_back(vi);
                    advance = 0;
                    off = net.lanes[lane].length;
                    break;
                }
                // entering detectors at the new lane head fire for offset 0
                veh.prev_lane = lane;
                lane = next;
                ++veh.chain_pos;
                for (size_t di = 0; di < net.detectors.size(); ++di) {
                    const Detector& d = net.detectors[di];
                    if (d.lane == lane && d.offset == 0.0) {
                        ++world.detector_counts[di];
                        world.events_last_tick.push_back({static_cast<int>(di), veh.id, t_new});
                    }
                }
                off = 0;
            }
            veh.lane = lane;
            veh.offset = off;
            if (veh.prev_lane >= 0 && veh.offset >= veh.params.length) veh.prev_lane = -1;
        }
    }

    // rebuild per-lane orderings
    for (auto& lst : world.lane_vehicles) lst.clear();
    for (size_t vi = 0; vi < world.vehicles.size(); ++vi) {
        if (!world.active[vi]) continue;
        const Vehicle& veh = world.vehicles[vi];
        if (veh.arrive) continue;
        world.lane_vehicles[veh.lane].push_back(static_cast<int>(vi));
    }
    for (auto& lst : world.lane_vehicles) {
        std::sort(lst.begin(), lst.end(), [&](int a, int b) {
            const Vehicle& va = world.vehicles[a];
            const Vehicle& vb = world.vehicles[b];
            if (va.offset != vb.offset) return va.offset > vb.offset;
            return va.id < vb.id;
        });
    }

    // (6) demand spawns, flows in declaration order
    for (size_t fi = 0; fi < cfg.flows.size(); ++fi) {
        FlowSchedule& fs = world.schedule[fi];
        const DemandFlow& f = cfg.flows[fi];
        while (fs.next < static_cast<int>(fs.spawn_ticks.size()) &&
               fs.spawn_ticks[fs.next] <= world.tick) {
            const int first_lane = net.routes[f.route].lanes.front();
            double entry_space = net.lanes[first_lane].length;
            for (int vi : world.lane_vehicles[first_lane]) {
                const Vehicle& o = world.vehicles[vi];
                entry_space = std::min(entry_space, o.offset - o.params.length);
            }
            if (entry_space < kSlotLength) break;  // deferred, retried next tick

            Vehicle veh;
            veh.id = static_cast<int>(world.vehicles.size());
            veh.kind = f.kind;
            veh.params = cfg.params(f.kind);
            veh.route = f.route;
            veh.chain_pos = 0;
            veh.lane = first_lane;
            veh.offset = 0;
            veh.speed = 0;
            veh.depart = t_new;
            double vd = veh.params.v_max;
            for (int li : net.routes[f.route].lanes)
                vd = std::min(vd, net.lanes[li].speed_limit);
            veh.v_desired = vd;
            world.vehicles.push_back(veh);
            world.active.push_back(1);
            world.stationary_since.push_back(t_new);
            world.next_speeds.push_back(0);
            world.lane_vehicles[first_lane].push_back(veh.id);
            ++world.spawned;
            ++fs.next;
        }
    }

    for (int vi : arrivals) {
        world.active[vi] = 0;
        ++world.arrived_count;
    }

    world.time = t_new;
    ++world.tick;

    // (7) trace samples (vehicle id order), quantized
    for (size_t vi = 0; vi < world.vehicles.size(); ++vi) {
        const Vehicle& veh = world.vehicles[vi];
        const bool arrived_now = veh.arrive && *veh.arrive == t_new;
        if (!world.active[vi] && !arrived_now) continue;
        TraceSample s;
        s.time_ms = std::llround(t_new * 1000.0);
        s.vehicle = veh.id;
        s.lane = veh.lane;
        s.offset_mm = std::llround(veh.offset * 1000.0);
        s.speed_mms = std::llround(veh.speed * 1000.0);
        s.held = veh.held;
        world.trace.push_back(s);
    }

    // deadlock bookkeeping (rolling equivalent of the trace-window test)
    for (size_t vi = 0; vi < world.vehicles.size(); ++vi) {
        if (!world.active[vi]) continue;
        if (world.vehicles[vi].speed >= kStandstillSpeed) world.stationary_since[vi] = t_new;
    }
    if (!world.deadlock && !cfg.network.zones.empty()) {
        const ZoneSpec& zone = cfg.network.zones.front();
        int in_zone = 0;
        bool all_stale = true;
        for (size_t vi = 0; vi < world.vehicles.size(); ++vi) {
            if (!world.active[vi]) continue;
            const Vehicle& veh = world.vehicles[vi];
            const Position p = locate(net.lanes[veh.lane], std::min(veh.offset, net.lanes[veh.lane].length));
            if (zone_of(p, zone) == Zone::Outside) continue;
            ++in_zone;
            if (t_new - world.stationary_since[vi] < 60.0) all_stale = false;
        }
        if (in_zone >= 3 && all_stale) {
            world.deadlock = true;
            world.deadlock_time = t_new;
        }
    }

    for (size_t ji = 0; ji < net.junctions.size(); ++ji) {
        if (!net.junctions[ji].pool) continue;
        world.max_pool_occ[ji] =
            std::max(world.max_pool_occ[ji], pool_occupancy(world, cfg, static_cast<int>(ji)));
    }
}

}  // namespace v2i
