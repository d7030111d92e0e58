#pragma once

#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "v2i/engine.hpp"
#include "v2i/reports.hpp"

namespace v2i {

// Trajectory trace format, one record per line:
//   # v2isim trace 1
//   config <hex fingerprint>    mode/seed/dt/spawned/arrived/deadlock headers
//   V <id> <kind> <route> <v_desired mm/s> <depart ms> <arrive ms|->
//   S <time ms> <vehicle> <lane> <offset mm> <speed mm/s> <held>
//   END <sample count>
// Everything is integer-quantized, so replay reproduces metrics bit-exactly.

inline std::string write_trace(const ScenarioConfig& cfg, const RunResult& run) {
    std::string out = "# v2isim trace 1\n";
    out += strfmt("config %016llx\n", (unsigned long long)run.fingerprint);
    out += strfmt("mode %s\n", mode_name(run.mode));
    out += strfmt("seed %llu\n", (unsigned long long)run.seed);
    out += strfmt("dt_ms %lld\n", (long long)std::llround(run.dt * 1000));
    out += strfmt("duration_ms %lld\n", (long long)std::llround(run.duration * 1000));
    out += strfmt("spawned %d\n", run.spawned);
    out += strfmt("arrived %d\n", run.arrived);
    out += strfmt("deadlock %d %lld\n", run.deadlock ? 1 : 0,
                  (long long)std::llround(run.deadlock_time * 1000));
    for (const Vehicle& v : run.vehicles) {
        out += strfmt("V %d %s %s %lld %lld ", v.id, kind_name(v.kind),
                      cfg.network.routes[v.route].id.c_str(),
                      (long long)std::llround(v.v_desired * 1000),
                      (long long)std::llround(v.depart * 1000));
        out += v.arrive ? strfmt("%lld\n", (long long)std::llround(*v.arrive * 1000))
                        : std::string("-\n");
    }
    for (const TraceSample& s : run.trace)
        out += strfmt("S %lld %d %s %lld %lld %d\n", (long long)s.time_ms, s.vehicle,
                      cfg.network.lanes[s.lane].id.c_str(), (long long)s.offset_mm,
                      (long long)s.speed_mms, s.held ? 1 : 0);
    out += strfmt("END %zu\n", run.trace.size());
    return out;
}

/// Rebuilds a RunResult (vehicles + samples + counters) from a trace.
/// Throws CorruptTrace on damage and ConfigMismatch when the trace does
/// not belong to `cfg`.
inline RunResult read_trace(const std::string& text, const ScenarioConfig& cfg) {
    std::istringstream in(text);
    std::string line;
    RunResult run;
    run.fingerprint = 0;
    run.dt = 0;

    if (!std::getline(in, line) || line != "# v2isim trace 1")
        fail(Errc::corrupt_trace, "missing trace header");

    bool saw_end = false;
    std::size_t declared_samples = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "config") {
            std::string hex;
            ls >> hex;
            run.fingerprint = std::strtoull(hex.c_str(), nullptr, 16);
        } else if (tag == "mode") {
            std::string m;
            ls >> m;
            run.mode = mode_from_name(m);
        } else if (tag == "seed") {
            ls >> run.seed;
        } else if (tag == "dt_ms") {
            long long ms;
            ls >> ms;
            run.dt = ms / 1000.0;
        } else if (tag == "duration_ms") {
            long long ms;
            ls >> ms;
            run.duration = ms / 1000.0;
        } else if (tag == "spawned") {
            ls >> run.spawned;
        } else if (tag == "arrived") {
            ls >> run.arrived;
        } else if (tag == "deadlock") {
            int flag;
            long long ms;
            ls >> flag >> ms;
            run.deadlock = flag != 0;
            run.deadlock_time = ms / 1000.0;
        } else if (tag == "V") {
            Vehicle v;
            std::string kind, route, arrive;
            long long vdes, depart;
            ls >> v.id >> kind >> route >> vdes >> depart >> arrive;
            if (ls.fail()) fail(Errc::corrupt_trace, "bad vehicle line: " + line);
            v.kind = kind == "emergency" ? VehicleKind::Emergency : VehicleKind::Passenger;
            v.route = cfg.network.route_of(route);
            v.v_desired = vdes / 1000.0;
            v.depart = depart / 1000.0;
            if (arrive != "-") v.arrive = std::strtoll(arrive.c_str(), nullptr, 10) / 1000.0;
            run.vehicles.push_back(v);
        } else if (tag == "S") {
            TraceSample s;
            std::string lane;
            int held;
            ls >> s.time_ms >> s.vehicle >> lane >> s.offset_mm >> s.speed_mms >> held;
            if (ls.fail()) fail(Errc::corrupt_trace, "bad sample line: " + line);
            s.lane = cfg.network.lane_of(lane);
            s.held = held != 0;
            run.trace.push_back(s);
        } else if (tag == "END") {
            ls >> declared_samples;
            saw_end = true;
        } else {
            fail(Errc::corrupt_trace, "unknown record: " + line);
        }
    }
    if (!saw_end) fail(Errc::corrupt_trace, "trace truncated (no END record)");
    if (declared_samples != run.trace.size())
        fail(Errc::corrupt_trace, "sample count mismatch");
    if (run.fingerprint != config_fingerprint(cfg))
        fail(Errc::config_mismatch, "trace was produced from a different scenario file");
    return run;
}

inline std::string payload_text(const ScenarioConfig& cfg, const MessageKind& kind) {
    const Network& net = cfg.network;
    std::string out;
    if (const auto* m = std::get_if<MsgRegister>(&kind)) {
        out = strfmt("veh=%d kind=%s route=%s", m->vehicle, kind_name(m->kind),
                     net.routes[m->route].id.c_str());
    } else if (const auto* m = std::get_if<MsgPositionUpdate>(&kind)) {
        out = strfmt("veh=%d lane=%s offset=%.3f speed=%.3f", m->vehicle,
                     net.lanes[m->lane].id.c_str(), m->offset, m->speed);
    } else if (const auto* m = std::get_if<MsgEmergencyDeclare>(&kind)) {
        out = strfmt("veh=%d route=%s", m->vehicle, net.routes[m->route].id.c_str());
    } else if (const auto* m = std::get_if<MsgZoneAlert>(&kind)) {
        out = strfmt("veh=%d", m->vehicle);
    } else if (const auto* m = std::get_if<MsgStaySteady>(&kind)) {
        out = strfmt("junction=%s", net.junctions[m->junction].id.c_str());
    } else if (std::get_if<MsgRelease>(&kind)) {
        out = "-";
    } else if (const auto* m = std::get_if<MsgPhaseOverride>(&kind)) {
        out = strfmt("junction=%s", net.junctions[m->junction].id.c_str());
        for (const auto& [lane, col] : m->colors)
            out += strfmt(" %s=%c", net.lanes[lane].id.c_str(), color_letter(col));
    } else if (const auto* m = std::get_if<MsgResumeSchedule>(&kind)) {
        out = strfmt("junction=%s", net.junctions[m->junction].id.c_str());
    } else if (const auto* m = std::get_if<MsgLaneChangeAdvisory>(&kind)) {
        out = strfmt("lane=%s", net.lanes[m->target_lane].id.c_str());
    } else if (const auto* m = std::get_if<MsgPhaseStatus>(&kind)) {
        out = strfmt("junction=%s overridden=%d", net.junctions[m->junction].id.c_str(),
                     m->overridden ? 1 : 0);
        for (const auto& [lane, col] : m->colors)
            out += strfmt(" %s=%c", net.lanes[lane].id.c_str(), color_letter(col));
    } else if (const auto* m = std::get_if<MsgIncidentReport>(&kind)) {
        out = "payload=" + m->payload;
    }
    return out;
}

/// Sniffer-style record of every delivered envelope.
inline std::string write_envelope_log(const ScenarioConfig& cfg, const RunResult& run) {
    std::string out = "# v2isim envelopes 1\n";
    for (const LoggedEnvelope& e : run.envelopes)
        out += strfmt("E %.3f %.3f %s %s %s %s\n", e.send_time, e.deliver_time,
                      e.from.str().c_str(), e.to.str().c_str(), message_name(e.kind),
                      payload_text(cfg, e.kind).c_str());
    return out;
}

}  // namespace v2i
