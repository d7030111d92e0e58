#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "v2i/bus.hpp"
#include "v2i/microsim.hpp"

namespace v2i {

constexpr double kHoldExemptDistance = 10.0;  // m before the stop line: never held
constexpr double kAdvisoryCooldown = 5.0;     // s between repeated lane-change advisories

struct Outgoing {
    Address to;
    MessageKind kind;
};

/// One signalized crossing along a route, in travel order.
struct RouteCrossing {
    int chain_pos = 0;
    int lane = -1;
    int junction = -1;
    double stop_offset = 0;
    double interior_end = 0;
};

inline std::vector<RouteCrossing> route_crossings(const Network& net, int route) {
    std::vector<RouteCrossing> out;
    const Route& r = net.routes[route];
    for (size_t pos = 0; pos < r.lanes.size(); ++pos) {
        const Lane& lane = net.lanes[r.lanes[pos]];
        for (const Crossing& c : lane.crossings)
            out.push_back({static_cast<int>(pos), r.lanes[pos], c.junction, c.stop_offset,
                           c.interior_end});
    }
    return out;
}

struct EmergencyMission {
    int vehicle = -1;
    int route = -1;
    enum class Phase { Declared, InSurveillance, InControl, Cleared };
    Phase phase = Phase::Declared;
    std::set<int> overridden;  // junctions currently under override
    std::vector<RouteCrossing> crossings;
    int next_crossing = 0;
    double last_advisory = -1e18;
};

inline const char* mission_phase_name(EmergencyMission::Phase p) {
    switch (p) {
        case EmergencyMission::Phase::Declared: return "declared";
        case EmergencyMission::Phase::InSurveillance: return "in-surveillance";
        case EmergencyMission::Phase::InControl: return "in-control";
        case EmergencyMission::Phase::Cleared: return "cleared";
    }
    return "?";
}

struct MissionEvent {
    double time = 0;
    EmergencyMission::Phase phase = EmergencyMission::Phase::Declared;
};

struct TRMState {
    RegisterLog log;
    std::optional<EmergencyMission> mission;
    std::vector<MissionEvent> mission_events;
    std::vector<std::string> diagnostics;
};

struct IMAState {
    int index = 0;
    int junction = -1;
    int zone = 0;
    std::set<int> hold_set;  // vehicles told StaySteady and not yet released
};

// ---- mobile agent ----

/// Per-tick output of an in-vehicle app: a Register (plus an
/// EmergencyDeclare for emergency vehicles when a control mode is live)
/// on activation, then a PositionUpdate every tick.
inline std::vector<Outgoing> mobile_on_tick(Vehicle& veh, const ScenarioConfig& cfg,
                                            int ima_index, Mode mode) {
    std::vector<Outgoing> out;
    if (!veh.app_active) return out;
    const AgentId ima{Role::IMA, ima_index};
    if (!veh.registered) {
        out.push_back({AgentId{Role::TRM, 0}, MsgRegister{veh.id, veh.kind, veh.route}});
        if (veh.kind == VehicleKind::Emergency && mode != Mode::Baseline)
            out.push_back({AgentId{Role::TRM, 0}, MsgEmergencyDeclare{veh.id, veh.route}});
        veh.registered = true;
    }
    const Position pos = locate(cfg.network.lanes[veh.lane],
                                std::min(veh.offset, cfg.network.lanes[veh.lane].length));
    out.push_back({ima, MsgPositionUpdate{veh.id, veh.lane, veh.offset, veh.speed, pos}});
    return out;
}

// ---- traffic room manager, emergency protocol ----

namespace detail {

/// Chain position of a reported lane on the mission route (parallels map
/// back to their chain counterpart); -1 if the lane is not on the route.
inline int chain_pos_of(const Network& net, int route, int lane) {
    const Route& r = net.routes[route];
    for (size_t i = 0; i < r.lanes.size(); ++i) {
        if (r.lanes[i] == lane) return static_cast<int>(i);
        if (net.lanes[r.lanes[i]].parallel == lane) return static_cast<int>(i);
    }
    return -1;
}

/// Distance along the route chain from (lane, offset) to a crossing's
/// stop line; negative once the crossing is passed.
inline double chain_distance(const Network& net, int route, int lane, double offset,
                             const RouteCrossing& c) {
    const int pos = chain_pos_of(net, route, lane);
    if (pos < 0 || pos > c.chain_pos) return -1;
    if (pos == c.chain_pos) return c.stop_offset - offset;
    double d = net.lanes[lane].length - offset;
    const Route& r = net.routes[route];
    for (int p = pos + 1; p < c.chain_pos; ++p) d += net.lanes[r.lanes[p]].length;
    return d + c.stop_offset;
}

/// Lights must be green before the emergency vehicle enters its braking
/// envelope; the horizon adds the report-to-effect messaging lag.
inline double preemption_horizon(const ScenarioConfig& cfg) {
    const VehicleParams& p = cfg.emergency;
    const double lag_ticks = 2.0 + 2.0 * cfg.sim.bus_latency_ticks;
    return p.v_max * p.v_max / (2.0 * p.decel) + p.v_max * p.tau +
           lag_ticks * p.v_max * cfg.sim.dt;
}

/// Green for the mission movement (and its parallel), red everywhere else.
inline std::map<int, LightColor> preemption_map(const Network& net, const Junction& junction,
                                                const RouteCrossing& crossing) {
    std::map<int, LightColor> colors;
    const int mission_lane = crossing.lane;
    const int partner = net.lanes[mission_lane].parallel;
    for (int a : junction.approaches)
        colors[a] = (a == mission_lane || a == partner) ? LightColor::Green : LightColor::Red;
    return colors;
}

}  // namespace detail

/// Creates a mission from an EmergencyDeclare. A second concurrent
/// mission is rejected and logged, not queued.
inline std::vector<Outgoing> trm_on_emergency_declare(TRMState& trm, const ScenarioConfig& cfg,
                                                      int vehicle, int route, double time) {
    if (trm.mission && trm.mission->phase != EmergencyMission::Phase::Cleared) {
        trm.diagnostics.push_back("t=" + std::to_string(time) + " second emergency vehicle " +
                                  std::to_string(vehicle) + " rejected; mission for " +
                                  std::to_string(trm.mission->vehicle) + " still active");
        return {};
    }
    EmergencyMission m;
    m.vehicle = vehicle;
    m.route = route;
    m.crossings = route_crossings(cfg.network, route);
    trm.mission = m;
    trm.mission_events.push_back({time, EmergencyMission::Phase::Declared});
    return {};
}

/// Position-driven core of the preemption protocol: zone transitions,
/// next-junction overrides, jam advisories.
inline std::vector<Outgoing> scenario_a_on_position(TRMState& trm, const ScenarioConfig& cfg,
                                                    const WorldState& world, int vehicle,
                                                    const Position& pos, int lane, double offset,
                                                    double time) {
    if (!trm.mission || trm.mission->vehicle != vehicle)
        fail(Errc::mission_unknown, "no active mission for vehicle " + std::to_string(vehicle));
    EmergencyMission& m = *trm.mission;
    std::vector<Outgoing> out;
    if (m.phase == EmergencyMission::Phase::Cleared) return out;

    const Network& net = cfg.network;
    const int zone_idx =
        m.next_crossing < static_cast<int>(m.crossings.size())
            ? net.junctions[m.crossings[m.next_crossing].junction].zone
            : 0;
    const ZoneSpec& zone = net.zones[zone_idx];
    const Zone z = zone_of(pos, zone);

    if (m.phase == EmergencyMission::Phase::Declared && z != Zone::Outside) {
        m.phase = EmergencyMission::Phase::InSurveillance;
        trm.mission_events.push_back({time, m.phase});
        out.push_back({ZoneBroadcast{zone_idx, Exemption::None}, MsgZoneAlert{vehicle}});
    }

    if (m.phase == EmergencyMission::Phase::InSurveillance && z == Zone::Control) {
        m.phase = EmergencyMission::Phase::InControl;
        trm.mission_events.push_back({time, m.phase});
        if (m.next_crossing < static_cast<int>(m.crossings.size())) {
            const RouteCrossing& c = m.crossings[m.next_crossing];
            const Junction& j = net.junctions[c.junction];
            out.push_back({AgentId{Role::TLAgent, world.light_of_junction[c.junction]},
                           MsgPhaseOverride{c.junction, detail::preemption_map(net, j, c)}});
            m.overridden.insert(c.junction);
            out.push_back({ZoneBroadcast{zone_idx, Exemption::MissionTraffic, c.junction,
                                         vehicle, m.route},
                           MsgStaySteady{c.junction}});
        }
    }

    if (m.phase == EmergencyMission::Phase::InControl) {
        // junction passage: flip the following junction
        const int pos_on_chain = detail::chain_pos_of(net, m.route, lane);
        while (m.next_crossing < static_cast<int>(m.crossings.size())) {
            const RouteCrossing& c = m.crossings[m.next_crossing];
            const bool passed = pos_on_chain > c.chain_pos ||
                                (pos_on_chain == c.chain_pos && offset > c.interior_end);
            if (!passed) break;
            ++m.next_crossing;
            if (m.next_crossing < static_cast<int>(m.crossings.size())) {
                const RouteCrossing& nxt = m.crossings[m.next_crossing];
                if (!m.overridden.count(nxt.junction)) {
                    const Junction& j = net.junctions[nxt.junction];
                    out.push_back(
                        {AgentId{Role::TLAgent, world.light_of_junction[nxt.junction]},
                         MsgPhaseOverride{nxt.junction, detail::preemption_map(net, j, nxt)}});
                    m.overridden.insert(nxt.junction);
                }
            }
        }
        // closely spaced junctions: flip early enough for the braking envelope
        const double horizon = detail::preemption_horizon(cfg);
        for (int i = m.next_crossing; i < static_cast<int>(m.crossings.size()); ++i) {
            const RouteCrossing& c = m.crossings[i];
            if (m.overridden.count(c.junction)) continue;
            const double d = detail::chain_distance(net, m.route, lane, offset, c);
            if (d < 0 || d > horizon) continue;
            const Junction& j = net.junctions[c.junction];
            out.push_back({AgentId{Role::TLAgent, world.light_of_junction[c.junction]},
                           MsgPhaseOverride{c.junction, detail::preemption_map(net, j, c)}});
            m.overridden.insert(c.junction);
        }
        // jam advisory toward the parallel lane, rate-limited
        const Vehicle& veh = world.vehicles[vehicle];
        if (net.lanes[veh.lane].parallel >= 0 && time - m.last_advisory >= kAdvisoryCooldown &&
            jam_ahead(world, cfg, veh)) {
            out.push_back({AgentId{Role::MobileAgent, vehicle},
                           MsgLaneChangeAdvisory{net.lanes[veh.lane].parallel}});
            m.last_advisory = time;
        }
    }
    return out;
}

/// Exit-detector handling: once the emergency vehicle crosses the exit
/// detector past the last signal, all overrides are lifted and held
/// vehicles released.
inline std::vector<Outgoing> scenario_a_on_detectors(TRMState& trm, const ScenarioConfig& cfg,
                                                     const WorldState& world,
                                                     const std::vector<DetectorEvent>& events,
                                                     double time) {
    std::vector<Outgoing> out;
    if (!trm.mission) return out;
    EmergencyMission& m = *trm.mission;
    if (m.phase != EmergencyMission::Phase::InControl) return out;
    const Network& net = cfg.network;
    for (const DetectorEvent& ev : events) {
        if (ev.vehicle != m.vehicle) continue;
        const Detector& d = net.detectors[ev.detector];
        if (d.kind != DetectorKind::Exit) continue;
        const int pos = detail::chain_pos_of(net, m.route, d.lane);
        if (pos < 0) continue;
        if (!m.crossings.empty()) {
            const RouteCrossing& last = m.crossings.back();
            if (pos < last.chain_pos || (pos == last.chain_pos && d.offset <= last.interior_end))
                continue;  // not past the last signal yet
        }
        m.phase = EmergencyMission::Phase::Cleared;
        trm.mission_events.push_back({time, m.phase});
        for (int junction : m.overridden)
            out.push_back({AgentId{Role::TLAgent, world.light_of_junction[junction]},
                           MsgResumeSchedule{junction}});
        m.overridden.clear();
        const int zone_idx = net.junctions[net.routes[m.route].dest_junction].zone;
        out.push_back({ZoneBroadcast{zone_idx, Exemption::None}, MsgRelease{}});
        break;
    }
    return out;
}

// ---- intersection management agent, pool gating ----

/// Pool gating: at or above the occupation threshold, hold every
/// control-zone vehicle approaching the junction that is more than 10 m
/// from its stop line; below the threshold, release everyone held.
inline std::vector<Outgoing> scenario_b_on_tick(IMAState& ima, const ScenarioConfig& cfg,
                                                const WorldState& world) {
    std::vector<Outgoing> out;
    const Network& net = cfg.network;
    const Junction& junction = net.junctions[ima.junction];
    if (!junction.pool) return out;

    const int count = pool_occupancy(world, cfg, ima.junction);
    const int threshold = occupation_threshold(junction.pool->capacity);
    const ZoneSpec& zone = net.zones[ima.zone];

    if (count >= threshold) {
        for (size_t vi = 0; vi < world.vehicles.size(); ++vi) {
            if (!world.active[vi]) continue;
            const Vehicle& veh = world.vehicles[vi];
            if (veh.kind == VehicleKind::Emergency || !veh.app_active) continue;
            if (veh.held || ima.hold_set.count(veh.id)) continue;
            const Lane& lane = net.lanes[veh.lane];
            const Crossing* c = lane.crossing_at(ima.junction);
            if (!c || c->stop_offset <= veh.offset) continue;
            if (c->stop_offset - veh.offset <= kHoldExemptDistance) continue;  // first two rows
            const Position pos = locate(lane, std::min(veh.offset, lane.length));
            if (zone_of(pos, zone) != Zone::Control) continue;
            out.push_back({AgentId{Role::MobileAgent, veh.id}, MsgStaySteady{ima.junction}});
            ima.hold_set.insert(veh.id);
        }
    } else if (!ima.hold_set.empty()) {
        for (int v : ima.hold_set)
            out.push_back({AgentId{Role::MobileAgent, v}, MsgRelease{}});
        ima.hold_set.clear();
    }
    return out;
}

// ---- traffic light agent ----

/// Applies PhaseOverride / ResumeSchedule and reports the resulting phase
/// status back to the control room. An out-of-order ResumeSchedule is
/// logged and leaves the state unchanged.
inline std::vector<Outgoing> tl_agent_on_message(TrafficLightState& tl, const MessageKind& kind,
                                                 double time,
                                                 std::vector<std::string>& diagnostics) {
    if (const auto* ov = std::get_if<MsgPhaseOverride>(&kind)) {
        set_override(tl, ov->colors);
    } else if (std::get_if<MsgResumeSchedule>(&kind)) {
        if (!tl.overridden) {
            diagnostics.push_back("t=" + std::to_string(time) + " junction #" +
                                  std::to_string(tl.junction) +
                                  " ResumeSchedule while already on schedule");
            return {};
        }
        clear_override(tl, time);
    } else {
        return {};
    }
    MsgPhaseStatus status;
    status.junction = tl.junction;
    status.overridden = tl.overridden;
    for (int a : tl.approaches) status.colors[a] = color_for(tl, a, time);
    return {{AgentId{Role::TRM, 0}, status}};
}

}  // namespace v2i
