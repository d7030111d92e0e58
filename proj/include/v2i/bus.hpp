#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "v2i/geometry.hpp"
#include "v2i/scenario.hpp"
#include "v2i/signal.hpp"

namespace v2i {

enum class Role { TRM, IMA, TLAgent, MobileAgent };

inline const char* role_name(Role r) {
    switch (r) {
        case Role::TRM: return "TRM";
        case Role::IMA: return "IMA";
        case Role::TLAgent: return "TL";
        case Role::MobileAgent: return "MOB";
    }
    return "?";
}

struct AgentId {
    Role role = Role::TRM;
    int index = 0;

    bool operator==(const AgentId& o) const { return role == o.role && index == o.index; }
    bool operator<(const AgentId& o) const {
        if (role != o.role) return static_cast<int>(role) < static_cast<int>(o.role);
        return index < o.index;
    }
    std::string str() const { return std::string(role_name(role)) + "#" + std::to_string(index); }
};

// ---- message payloads ----

struct MsgRegister {
    int vehicle = -1;
    VehicleKind kind = VehicleKind::Passenger;
    int route = -1;
};
struct MsgPositionUpdate {
    int vehicle = -1;
    int lane = -1;
    double offset = 0;
    double speed = 0;
    Position pos;
};
struct MsgEmergencyDeclare {
    int vehicle = -1;
    int route = -1;
};
struct MsgZoneAlert {
    int vehicle = -1;  // the approaching emergency
};
struct MsgStaySteady {
    int junction = -1;  // hold point: the stop line toward this junction
};
struct MsgRelease {};
struct MsgPhaseOverride {
    int junction = -1;
    std::map<int, LightColor> colors;
};
struct MsgResumeSchedule {
    int junction = -1;
};
struct MsgLaneChangeAdvisory {
    int target_lane = -1;
};
struct MsgPhaseStatus {
    int junction = -1;
    bool overridden = false;
    std::map<int, LightColor> colors;
};
struct MsgIncidentReport {
    std::string payload;  // accepted and logged, never acted upon
};

using MessageKind =
    std::variant<MsgRegister, MsgPositionUpdate, MsgEmergencyDeclare, MsgZoneAlert, MsgStaySteady,
                 MsgRelease, MsgPhaseOverride, MsgResumeSchedule, MsgLaneChangeAdvisory,
                 MsgPhaseStatus, MsgIncidentReport>;

inline const char* message_name(const MessageKind& kind) {
    static const char* names[] = {"Register",       "PositionUpdate", "EmergencyDeclare",
                                  "ZoneAlert",      "StaySteady",     "Release",
                                  "PhaseOverride",  "ResumeSchedule", "LaneChangeAdvisory",
                                  "PhaseStatus",    "IncidentReport"};
    return names[kind.index()];
}

enum class Exemption { None, FirstTwoRows, MissionTraffic };

/// Delivery to every registered mobile agent currently inside a zone's
/// control circle, minus the exemption set. Membership and exemptions are
/// resolved at delivery time.
struct ZoneBroadcast {
    int zone = 0;
    Exemption exemption = Exemption::None;
    int junction = -1;         // context for FirstTwoRows
    int mission_vehicle = -1;  // context for MissionTraffic
    int mission_route = -1;
};

using Address = std::variant<AgentId, ZoneBroadcast>;

struct Envelope {
    AgentId from;
    Address to;
    MessageKind kind;
    double send_time = 0;
    double deliver_time = 0;
    std::uint64_t seq = 0;
};

/// Deterministic simulated message bus: fixed latency, strict
/// (deliver_time, sender, seq) delivery order.
class Bus {
public:
    Bus(double dt = 0.5, int latency_ticks = 1) : dt_(dt), latency_ticks_(latency_ticks) {}

    void add_agent(AgentId id) { agents_.insert(id); }
    bool has_agent(AgentId id) const { return agents_.count(id) > 0; }
    double latency() const { return latency_ticks_ * dt_; }

    void send(AgentId from, Address to, MessageKind kind, double send_time) {
        if (!agents_.count(from)) fail(Errc::unknown_sender, from.str());
        Envelope env;
        env.from = from;
        env.to = std::move(to);
        env.kind = std::move(kind);
        env.send_time = send_time;
        env.deliver_time = send_time + latency();
        env.seq = ++seq_[from];
        queue_.push_back(std::move(env));
    }

    /// All envelopes due at `time`, sorted by (deliver_time, sender role,
    /// sender index, seq) and removed from the queue.
    std::vector<Envelope> deliver_due(double time) {
        std::vector<Envelope> due;
        auto it = std::stable_partition(queue_.begin(), queue_.end(),
                                        [&](const Envelope& e) { return e.deliver_time > time; });
        due.assign(std::make_move_iterator(it), std::make_move_iterator(queue_.end()));
        queue_.erase(it, queue_.end());
        std::sort(due.begin(), due.end(), [](const Envelope& a, const Envelope& b) {
            if (a.deliver_time != b.deliver_time) return a.deliver_time < b.deliver_time;
            if (!(a.from == b.from)) return a.from < b.from;
            return a.seq < b.seq;
        });
        return due;
    }

    size_t pending() const { return queue_.size(); }

private:
    double dt_;
    int latency_ticks_;
    std::vector<Envelope> queue_;
    std::map<AgentId, std::uint64_t> seq_;
    std::set<AgentId> agents_;
};

// ---- register log ----

struct RegisterEntry {
    VehicleKind kind = VehicleKind::Passenger;
    int route = -1;
    double time = 0;
    std::vector<std::pair<double, Zone>> zone_history;  // append-only
};

struct RegisterLog {
    std::map<int, RegisterEntry> entries;
};

inline void register_vehicle(RegisterLog& log, int vehicle, VehicleKind kind, int route,
                             double time) {
    if (log.entries.count(vehicle))
        fail(Errc::duplicate_registration, "vehicle " + std::to_string(vehicle));
    log.entries[vehicle] = RegisterEntry{kind, route, time, {}};
}

inline void note_zone(RegisterLog& log, int vehicle, double time, Zone zone) {
    auto it = log.entries.find(vehicle);
    if (it == log.entries.end()) return;
    auto& hist = it->second.zone_history;
    if (hist.empty() || hist.back().second != zone) hist.emplace_back(time, zone);
}

}  // namespace v2i
