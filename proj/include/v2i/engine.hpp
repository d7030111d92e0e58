#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "v2i/controllers.hpp"

namespace v2i {

struct LoggedEnvelope {
    double send_time = 0;
    double deliver_time = 0;
    AgentId from;
    AgentId to;
    MessageKind kind;
};

struct LightEvent {
    double time = 0;
    int junction = -1;
    bool overridden = false;
};

struct RunResult {
    Mode mode = Mode::Baseline;
    std::uint64_t seed = 0;
    std::uint64_t fingerprint = 0;
    double dt = 0.5;
    double duration = 0;

    std::vector<Vehicle> vehicles;
    std::vector<TraceSample> trace;
    std::vector<LoggedEnvelope> envelopes;
    int spawned = 0;
    int arrived = 0;
    bool deadlock = false;
    double deadlock_time = -1;
    std::vector<int> max_pool_occ;

    std::vector<MissionEvent> mission_events;
    std::vector<LightEvent> light_events;
    std::vector<std::string> diagnostics;
    std::vector<std::string> preemption_violations;

    double in_control_time() const {
        for (const MissionEvent& e : mission_events)
            if (e.phase == EmergencyMission::Phase::InControl) return e.time;
        return -1;
    }
    double cleared_time() const {
        for (const MissionEvent& e : mission_events)
            if (e.phase == EmergencyMission::Phase::Cleared) return e.time;
        return -1;
    }
};

namespace detail {

struct PoolCheck {
    int junction = -1;
    std::vector<int> entry_detectors;
    std::vector<int> exit_detectors;
};

inline std::vector<PoolCheck> match_pool_detectors(const Network& net) {
    std::vector<PoolCheck> checks;
    for (size_t ji = 0; ji < net.junctions.size(); ++ji) {
        const Junction& j = net.junctions[ji];
        if (!j.pool) continue;
        PoolCheck pc;
        pc.junction = static_cast<int>(ji);
        bool complete = true;
        for (const PoolInterval& iv : j.pool->intervals) {
            int entry = -1, exit = -1;
            for (size_t di = 0; di < net.detectors.size(); ++di) {
                const Detector& d = net.detectors[di];
                if (d.lane != iv.lane) continue;
                if (d.kind == DetectorKind::Entry && std::abs(d.offset - iv.begin) < 1e-9)
                    entry = static_cast<int>(di);
                if (d.kind == DetectorKind::Exit && std::abs(d.offset - iv.end) < 1e-9)
                    exit = static_cast<int>(di);
            }
            if (entry < 0 || exit < 0) {
                complete = false;
                break;
            }
            pc.entry_detectors.push_back(entry);
            pc.exit_detectors.push_back(exit);
        }
        if (complete) checks.push_back(std::move(pc));
    }
    return checks;
}

class Engine {
public:
    Engine(const ScenarioConfig& cfg, std::uint64_t seed)
        : cfg_(cfg),
          bus_(cfg.sim.dt, cfg.sim.bus_latency_ticks),
          world_(make_world(cfg, seed)),
          seed_(seed) {
        const Network& net = cfg_.network;
        bus_.add_agent({Role::TRM, 0});
        for (size_t k = 0; k < world_.lights.size(); ++k) {
            bus_.add_agent({Role::IMA, static_cast<int>(k)});
            bus_.add_agent({Role::TLAgent, static_cast<int>(k)});
            IMAState ima;
            ima.index = static_cast<int>(k);
            ima.junction = world_.lights[k].junction;
            ima.zone = net.junctions[ima.junction].zone;
            imas_.push_back(ima);
        }
        pool_checks_ = match_pool_detectors(net);
    }

    RunResult run() {
        const std::int64_t ticks =
            static_cast<std::int64_t>(std::llround(cfg_.sim.duration / cfg_.sim.dt));
        for (std::int64_t k = 0; k < ticks; ++k) tick();

        RunResult res;
        res.mode = cfg_.sim.mode;
        res.seed = seed_;
        res.fingerprint = config_fingerprint(cfg_);
        res.dt = cfg_.sim.dt;
        res.duration = cfg_.sim.duration;
        res.vehicles = std::move(world_.vehicles);
        res.trace = std::move(world_.trace);
        res.envelopes = std::move(log_);
        res.spawned = world_.spawned;
        res.arrived = world_.arrived_count;
        res.deadlock = world_.deadlock;
        res.deadlock_time = world_.deadlock_time;
        res.max_pool_occ = world_.max_pool_occ;
        res.mission_events = trm_.mission_events;
        res.light_events = std::move(light_events_);
        res.diagnostics = std::move(trm_.diagnostics);
        res.preemption_violations = std::move(preemption_violations_);
        return res;
    }

private:
    void send_all(AgentId from, const std::vector<Outgoing>& msgs, double t) {
        for (const Outgoing& m : msgs) bus_.send(from, m.to, m.kind, t);
    }

    void dispatch_to_mobile(const Envelope& env, int vehicle, double t) {
        log_.push_back({env.send_time, t, env.from, {Role::MobileAgent, vehicle}, env.kind});
        Vehicle& veh = world_.vehicles[vehicle];
        if (!world_.active[vehicle]) return;
        if (const auto* hold = std::get_if<MsgStaySteady>(&env.kind)) {
            if (veh.kind == VehicleKind::Emergency) return;
            const Crossing* c = cfg_.network.lanes[veh.lane].crossing_at(hold->junction);
            if (!c || c->stop_offset <= veh.offset) return;  // not approaching that line
            veh.held = true;
            veh.hold_junction = hold->junction;
        } else if (std::get_if<MsgRelease>(&env.kind)) {
            if (veh.held) veh.hold_release_pending = true;
        } else if (const auto* adv = std::get_if<MsgLaneChangeAdvisory>(&env.kind)) {
            veh.pending_lane_change = adv->target_lane;
        }
        // ZoneAlert is informational only
    }

    bool broadcast_exempt(const ZoneBroadcast& b, const Vehicle& veh) const {
        const Network& net = cfg_.network;
        switch (b.exemption) {
            case Exemption::None:
                return false;
            case Exemption::FirstTwoRows: {
                const Crossing* c = net.lanes[veh.lane].crossing_at(b.junction);
                return c && c->stop_offset > veh.offset &&
                       c->stop_offset - veh.offset <= kHoldExemptDistance;
            }
            case Exemption::MissionTraffic:
                return veh.id == b.mission_vehicle ||
                       detail::chain_pos_of(net, b.mission_route, veh.lane) >= 0;
        }
        return false;
    }

    void deliver_phase(double t) {
        for (Envelope& env : bus_.deliver_due(t)) {
            if (const auto* b = std::get_if<ZoneBroadcast>(&env.to)) {
                const ZoneSpec& zone = cfg_.network.zones[b->zone];
                for (size_t vi = 0; vi < world_.vehicles.size(); ++vi) {
                    if (!world_.active[vi]) continue;
                    const Vehicle& veh = world_.vehicles[vi];
                    if (!veh.app_active || !trm_.log.entries.count(veh.id)) continue;
                    const Lane& lane = cfg_.network.lanes[veh.lane];
                    const Position pos = locate(lane, std::min(veh.offset, lane.length));
                    if (zone_of(pos, zone) != Zone::Control) continue;
                    if (broadcast_exempt(*b, veh)) continue;
                    dispatch_to_mobile(env, veh.id, t);
                }
                continue;
            }
            const AgentId to = std::get<AgentId>(env.to);
            switch (to.role) {
                case Role::MobileAgent:
                    dispatch_to_mobile(env, to.index, t);
                    break;
                case Role::TRM: {
                    log_.push_back({env.send_time, t, env.from, to, env.kind});
                    if (const auto* reg = std::get_if<MsgRegister>(&env.kind)) {
                        register_vehicle(trm_.log, reg->vehicle, reg->kind, reg->route, t);
                    } else if (const auto* dec = std::get_if<MsgEmergencyDeclare>(&env.kind)) {
                        if (cfg_.sim.mode == Mode::ScenarioA)
                            send_all({Role::TRM, 0},
                                     trm_on_emergency_declare(trm_, cfg_, dec->vehicle,
                                                              dec->route, t),
                                     t);
                        else
                            trm_.diagnostics.push_back(
                                "t=" + std::to_string(t) + " EmergencyDeclare from vehicle " +
                                std::to_string(dec->vehicle) + " ignored in this mode");
                    }
                    break;
                }
                case Role::IMA: {
                    log_.push_back({env.send_time, t, env.from, to, env.kind});
                    if (const auto* pu = std::get_if<MsgPositionUpdate>(&env.kind)) {
                        note_zone(trm_.log, pu->vehicle, t,
                                  zone_of(pu->pos, cfg_.network.zones[imas_[to.index].zone]));
                        if (cfg_.sim.mode == Mode::ScenarioA && trm_.mission &&
                            trm_.mission->vehicle == pu->vehicle &&
                            world_.active[pu->vehicle]) {
                            send_all({Role::TRM, 0},
                                     scenario_a_on_position(trm_, cfg_, world_, pu->vehicle,
                                                            pu->pos, pu->lane, pu->offset, t),
                                     t);
                        }
                    }
                    break;
                }
                case Role::TLAgent: {
                    log_.push_back({env.send_time, t, env.from, to, env.kind});
                    TrafficLightState& tl = world_.lights[to.index];
                    const bool was = tl.overridden;
                    send_all({Role::TLAgent, to.index},
                             tl_agent_on_message(tl, env.kind, t, trm_.diagnostics), t);
                    if (tl.overridden != was)
                        light_events_.push_back({t, tl.junction, tl.overridden});
                    break;
                }
            }
        }
    }

    void agent_phase(double t) {
        if (cfg_.sim.mode == Mode::ScenarioA && trm_.mission)
            send_all({Role::TRM, 0},
                     scenario_a_on_detectors(trm_, cfg_, world_, world_.events_last_tick, t), t);
        if (cfg_.sim.mode == Mode::ScenarioB)
            for (IMAState& ima : imas_)
                send_all({Role::IMA, ima.index}, scenario_b_on_tick(ima, cfg_, world_), t);
        for (size_t vi = 0; vi < world_.vehicles.size(); ++vi) {
            if (!world_.active[vi]) continue;
            Vehicle& veh = world_.vehicles[vi];
            if (!veh.app_active) continue;
            if (!bus_.has_agent({Role::MobileAgent, veh.id}))
                bus_.add_agent({Role::MobileAgent, veh.id});
            send_all({Role::MobileAgent, veh.id},
                     mobile_on_tick(veh, cfg_, nearest_ima(veh), cfg_.sim.mode), t);
        }
    }

    int nearest_ima(const Vehicle& veh) const {
        if (imas_.empty()) return 0;
        const Lane& lane = cfg_.network.lanes[veh.lane];
        const Position pos = locate(lane, std::min(veh.offset, lane.length));
        int best = 0;
        double best_d = 1e300;
        for (const IMAState& ima : imas_) {
            const double d = distance(pos, cfg_.network.junctions[ima.junction].center);
            if (d < best_d - 1e-9) {
                best_d = d;
                best = ima.index;
            }
        }
        return best;
    }

    void pre_physics(double) {
        for (size_t vi = 0; vi < world_.vehicles.size(); ++vi) {
            if (!world_.active[vi]) continue;
            Vehicle& veh = world_.vehicles[vi];
            if (veh.hold_release_pending) {
                veh.held = false;
                veh.hold_junction = -1;
                veh.hold_release_pending = false;
            }
            if (veh.pending_lane_change >= 0) {
                if (veh.lane == veh.pending_lane_change) {
                    veh.pending_lane_change = -1;
                } else if (cfg_.network.lanes[veh.lane].parallel == veh.pending_lane_change) {
                    if (apply_lane_change(world_, cfg_, veh.id, veh.pending_lane_change))
                        veh.pending_lane_change = -1;
                } else {
                    veh.pending_lane_change = -1;  // stale advisory
                }
            }
        }
    }

    void check_invariants() {
        const Network& net = cfg_.network;
        int active_count = 0;
        for (size_t vi = 0; vi < world_.vehicles.size(); ++vi) {
            if (!world_.active[vi]) continue;
            ++active_count;
            const Vehicle& veh = world_.vehicles[vi];
            if (veh.speed < 0 || veh.speed > veh.params.v_max + 1e-9)
                fail(Errc::invariant_violation,
                     "speed bound broken for vehicle " + std::to_string(veh.id));
            if (veh.held && veh.hold_junction >= 0) {
                const Crossing* c = net.lanes[veh.lane].crossing_at(veh.hold_junction);
                if (c && veh.offset > c->stop_offset - kStopMargin + 1e-6)
                    fail(Errc::invariant_violation,
                         "held vehicle " + std::to_string(veh.id) + " crossed its hold point");
            }
        }
        if (world_.spawned != active_count + world_.arrived_count)
            fail(Errc::invariant_violation, "vehicle conservation broken");
        for (size_t li = 0; li < net.lanes.size(); ++li) {
            const auto& lst = world_.lane_vehicles[li];
            for (size_t i = 0; i + 1 < lst.size(); ++i) {
                const Vehicle& lead = world_.vehicles[lst[i]];
                const Vehicle& follow = world_.vehicles[lst[i + 1]];
                if (lead.offset - lead.params.length - follow.offset < -1e-6)
                    fail(Errc::invariant_violation,
                         "collision on lane " + net.lanes[li].id + " between " +
                             std::to_string(lead.id) + " and " + std::to_string(follow.id));
            }
        }
        for (const PoolCheck& pc : pool_checks_) {
            std::int64_t entries = 0, exits = 0;
            for (int di : pc.entry_detectors) entries += world_.detector_counts[di];
            for (int di : pc.exit_detectors) exits += world_.detector_counts[di];
            const int geometric = pool_occupancy(world_, cfg_, pc.junction);
            if (entries - exits != geometric)
                fail(Errc::invariant_violation,
                     "pool bookkeeping mismatch at " + net.junctions[pc.junction].id + ": " +
                         std::to_string(entries - exits) + " by detectors vs " +
                         std::to_string(geometric) + " geometric");
        }
    }

    void check_preemption_safety(double t) {
        if (cfg_.sim.mode != Mode::ScenarioA || !trm_.mission) return;
        const EmergencyMission& m = *trm_.mission;
        if (m.phase != EmergencyMission::Phase::InControl) return;
        if (!world_.active[m.vehicle]) return;
        const Network& net = cfg_.network;
        const Vehicle& veh = world_.vehicles[m.vehicle];
        const int pos = detail::chain_pos_of(net, m.route, veh.lane);
        const double stopping =
            veh.speed * veh.speed / (2.0 * veh.params.decel) + veh.speed * veh.params.tau;
        for (const RouteCrossing& c : m.crossings) {
            double dist;
            if (c.chain_pos < pos || (c.chain_pos == pos && c.stop_offset <= veh.offset))
                continue;  // passed
            if (c.chain_pos == pos) {
                dist = c.stop_offset - veh.offset;
            } else {
                dist = net.lanes[veh.lane].length - veh.offset;
                const Route& r = net.routes[m.route];
                for (int p = pos + 1; p < c.chain_pos; ++p) dist += net.lanes[r.lanes[p]].length;
                dist += c.stop_offset;
            }
            if (dist > stopping) continue;
            const int light = world_.light_of_junction[c.junction];
            if (light < 0) continue;
            const int approach = veh.lane == c.lane || net.lanes[c.lane].parallel == veh.lane
                                     ? veh.lane
                                     : c.lane;
            if (color_for(world_.lights[light], approach, t) != LightColor::Green)
                preemption_violations_.push_back(
                    "t=" + std::to_string(t) + " junction " + net.junctions[c.junction].id +
                    " not green " + std::to_string(dist) + " m ahead of the mission vehicle");
        }
    }

    void tick() {
        const double t = world_.time;
        deliver_phase(t);
        agent_phase(t);
        pre_physics(t);
        // safety is judged on the state physics is about to use
        check_preemption_safety(t);
        step(world_, cfg_);
        check_invariants();
    }

    ScenarioConfig cfg_;
    Bus bus_;
    WorldState world_;
    std::uint64_t seed_;
    TRMState trm_;
    std::vector<IMAState> imas_;
    std::vector<LoggedEnvelope> log_;
    std::vector<LightEvent> light_events_;
    std::vector<std::string> preemption_violations_;
    std::vector<PoolCheck> pool_checks_;
};

}  // namespace detail

/// Runs one complete simulation with the given seed; `mode_override`
/// replaces the file's mode.
inline RunResult run_single(const ScenarioConfig& cfg, std::uint64_t seed,
                            std::optional<Mode> mode_override = std::nullopt) {
    ScenarioConfig c = cfg;
    c.sim.seed = seed;
    if (mode_override) c.sim.mode = *mode_override;
    detail::Engine engine(c, seed);
    return engine.run();
}

}  // namespace v2i
