#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "v2i/network.hpp"

namespace v2i {

enum class VehicleKind { Passenger, Emergency };

inline const char* kind_name(VehicleKind k) {
    return k == VehicleKind::Passenger ? "passenger" : "emergency";
}

struct VehicleParams {
    double length = 5.0;
    double accel = 0.6;     // m/s^2
    double decel = 4.5;     // m/s^2, comfortable braking
    double v_max = 13.9;    // m/s
    double tau = 1.0;       // reaction time, s
};

inline VehicleParams default_params(VehicleKind kind) {
    VehicleParams p;
    if (kind == VehicleKind::Emergency) {
        p.accel = 0.8;
        p.v_max = 22.2;
    }
    return p;
}

enum class Mode { Baseline, ScenarioA, ScenarioB };

inline const char* mode_name(Mode m) {
    switch (m) {
        case Mode::Baseline: return "baseline";
        case Mode::ScenarioA: return "scenario-a";
        case Mode::ScenarioB: return "scenario-b";
    }
    return "?";
}

inline Mode mode_from_name(const std::string& s) {
    if (s == "baseline") return Mode::Baseline;
    if (s == "scenario-a") return Mode::ScenarioA;
    if (s == "scenario-b") return Mode::ScenarioB;
    fail(Errc::invalid_value, "unknown mode '" + s + "'");
}

/// Deterministic fixed-headway arrivals for one route. With jitter enabled
/// each headway gets a seeded ±10 % perturbation.
struct DemandFlow {
    int route = -1;
    double start = 0;
    double headway = 0;
    int count = 0;
    VehicleKind kind = VehicleKind::Passenger;
    bool jitter = false;
};

struct SimParams {
    double dt = 0.5;
    double duration = 0;
    std::uint64_t seed = 1;
    int bus_latency_ticks = 1;
    Mode mode = Mode::Baseline;
};

struct ScenarioConfig {
    Network network;
    std::vector<DemandFlow> flows;
    VehicleParams passenger = default_params(VehicleKind::Passenger);
    VehicleParams emergency = default_params(VehicleKind::Emergency);
    SimParams sim;

    const VehicleParams& params(VehicleKind k) const {
        return k == VehicleKind::Passenger ? passenger : emergency;
    }
};

namespace detail {

using nlohmann::json;

inline double req_num(const json& j, const char* key, const std::string& ctx) {
    if (!j.contains(key) || !j.at(key).is_number())
        fail(Errc::syntax_error, ctx + ": missing numeric field '" + key + "'");
    return j.at(key).get<double>();
}

inline std::string req_str(const json& j, const char* key, const std::string& ctx) {
    if (!j.contains(key) || !j.at(key).is_string())
        fail(Errc::syntax_error, ctx + ": missing string field '" + key + "'");
    return j.at(key).get<std::string>();
}

inline Position parse_point(const json& j, const std::string& ctx) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        fail(Errc::syntax_error, ctx + ": point must be [x, y]");
    return {j[0].get<double>(), j[1].get<double>()};
}

inline void parse_vehicle_params(const json& j, VehicleParams& p, const std::string& ctx) {
    if (j.contains("length")) p.length = j.at("length").get<double>();
    if (j.contains("accel")) p.accel = j.at("accel").get<double>();
    if (j.contains("decel")) p.decel = j.at("decel").get<double>();
    if (j.contains("v_max")) p.v_max = j.at("v_max").get<double>();
    if (j.contains("tau")) p.tau = j.at("tau").get<double>();
    if (p.length <= 0 || p.accel <= 0 || p.decel <= 0 || p.v_max <= 0 || p.tau <= 0)
        fail(Errc::invalid_value, ctx + ": vehicle parameters must be strictly positive");
}

}  // namespace detail

/// Parses and fully validates a scenario document. Derived fields
/// (lane occupancies, pool capacities, pool intervals, default signal
/// programs) are computed here and cross-checked against any values the
/// file declares explicitly.
inline ScenarioConfig parse_scenario(const std::string& text) {
    using detail::json;
    using detail::parse_point;
    using detail::req_num;
    using detail::req_str;

    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        fail(Errc::syntax_error, e.what());
    }
    if (!doc.is_object() || !doc.contains("network") || !doc.contains("sim"))
        fail(Errc::syntax_error, "document needs 'network' and 'sim' sections");

    ScenarioConfig cfg;
    Network& net = cfg.network;
    const json& jnet = doc.at("network");

    // --- zones ---
    if (jnet.contains("zones")) {
        for (const auto& jz : jnet.at("zones")) {
            ZoneSpec z;
            z.center = parse_point(jz.at("center"), "zone");
            if (jz.contains("control_radius")) z.control_radius = jz.at("control_radius").get<double>();
            if (jz.contains("surveillance_radius"))
                z.surveillance_radius = jz.at("surveillance_radius").get<double>();
            if (!(z.control_radius > 0 && z.control_radius < z.surveillance_radius))
                fail(Errc::invalid_value, "zone radii must satisfy 0 < control < surveillance");
            net.zones.push_back(z);
        }
    }
    if (net.zones.empty()) net.zones.push_back(ZoneSpec{});  // origin-centred defaults

    // --- junctions (structure only; approaches/signals wired after lanes) ---
    if (!jnet.contains("junctions") || jnet.at("junctions").empty())
        fail(Errc::syntax_error, "network declares no junctions");
    for (const auto& jj : jnet.at("junctions")) {
        Junction j;
        j.id = req_str(jj, "id", "junction");
        j.center = parse_point(jj.at("center"), "junction " + j.id);
        if (jj.contains("zone")) {
            j.zone = jj.at("zone").get<int>();
            if (j.zone < 0 || j.zone >= static_cast<int>(net.zones.size()))
                fail(Errc::dangling_reference, "junction " + j.id + ": zone index out of range");
        }
        if (net.junction_index.count(j.id))
            fail(Errc::invalid_value, "duplicate junction id " + j.id);
        net.junction_index[j.id] = static_cast<int>(net.junctions.size());
        net.junctions.push_back(j);
    }

    // --- lanes ---
    if (!jnet.contains("lanes") || jnet.at("lanes").empty())
        fail(Errc::syntax_error, "network declares no lanes");
    for (const auto& jl : jnet.at("lanes")) {
        Lane l;
        l.id = req_str(jl, "id", "lane");
        const std::string ctx = "lane " + l.id;
        l.from_junction = net.junction_of(req_str(jl, "from", ctx));
        l.to_junction = net.junction_of(req_str(jl, "to", ctx));
        l.length = req_num(jl, "length", ctx);
        if (l.length <= 0) fail(Errc::invalid_value, ctx + ": length must be > 0");
        l.approach_angle = req_num(jl, "angle", ctx);
        if (jl.contains("speed_limit")) {
            l.speed_limit = jl.at("speed_limit").get<double>();
            if (l.speed_limit <= 0) fail(Errc::invalid_value, ctx + ": speed limit must be > 0");
        }
        l.start = net.junctions[l.from_junction].center;
        l.max_occ = max_occupancy(l.length);
        if (jl.contains("max_occupancy")) {
            const int declared = jl.at("max_occupancy").get<int>();
            if (declared != l.max_occ)
                fail(Errc::capacity_mismatch,
                     ctx + ": declared occupancy " + std::to_string(declared) +
                         " != computed " + std::to_string(l.max_occ));
        }
        if (jl.contains("crossings")) {
            for (const auto& jc : jl.at("crossings")) {
                Crossing c;
                c.junction = net.junction_of(req_str(jc, "junction", ctx));
                c.stop_offset = req_num(jc, "stop_offset", ctx);
                c.interior_end = jc.contains("interior_end")
                                     ? jc.at("interior_end").get<double>()
                                     : l.length;
                if (c.stop_offset <= 0 || c.stop_offset > l.length ||
                    c.interior_end < c.stop_offset || c.interior_end > l.length)
                    fail(Errc::invalid_value, ctx + ": crossing offsets out of range");
                l.crossings.push_back(c);
            }
            std::sort(l.crossings.begin(), l.crossings.end(),
                      [](const Crossing& a, const Crossing& b) { return a.stop_offset < b.stop_offset; });
        }
        if (net.lane_index.count(l.id)) fail(Errc::invalid_value, "duplicate lane id " + l.id);
        net.lane_index[l.id] = static_cast<int>(net.lanes.size());
        net.lanes.push_back(l);
    }

    // second pass: parallel links (forward references allowed)
    {
        size_t i = 0;
        for (const auto& jl : jnet.at("lanes")) {
            if (jl.contains("parallel")) {
                Lane& l = net.lanes[i];
                l.parallel = net.lane_of(jl.at("parallel").get<std::string>());
            }
            ++i;
        }
        for (const Lane& l : net.lanes) {
            if (l.parallel < 0) continue;
            const Lane& p = net.lanes[l.parallel];
            if (p.parallel != static_cast<int>(&l - net.lanes.data()))
                fail(Errc::invalid_value, "lane " + l.id + ": parallel link must be mutual");
            if (std::abs(p.length - l.length) > 1e-9)
                fail(Errc::invalid_value, "lane " + l.id + ": parallel lanes must have equal length");
        }
    }

    // wire approaches from crossings
    for (size_t li = 0; li < net.lanes.size(); ++li)
        for (const Crossing& c : net.lanes[li].crossings)
            net.junctions[c.junction].approaches.push_back(static_cast<int>(li));

    // --- routes ---
    if (!jnet.contains("routes") || jnet.at("routes").empty())
        fail(Errc::syntax_error, "network declares no routes");
    for (const auto& jr : jnet.at("routes")) {
        Route r;
        r.id = req_str(jr, "id", "route");
        const std::string ctx = "route " + r.id;
        r.source_junction = net.junction_of(req_str(jr, "source", ctx));
        r.dest_junction = net.junction_of(req_str(jr, "dest", ctx));
        if (!jr.contains("lanes") || jr.at("lanes").empty())
            fail(Errc::invalid_value, ctx + ": empty lane chain");
        for (const auto& jl : jr.at("lanes")) r.lanes.push_back(net.lane_of(jl.get<std::string>()));
        for (size_t i = 0; i + 1 < r.lanes.size(); ++i) {
            if (net.lanes[r.lanes[i]].to_junction != net.lanes[r.lanes[i + 1]].from_junction)
                fail(Errc::invalid_value, ctx + ": lanes do not chain at position " +
                                              std::to_string(i));
        }
        auto on_chain = [&](int junction) {
            for (int li : r.lanes) {
                const Lane& l = net.lanes[li];
                if (l.from_junction == junction || l.to_junction == junction) return true;
                for (const Crossing& c : l.crossings)
                    if (c.junction == junction) return true;
            }
            return false;
        };
        if (!on_chain(r.source_junction) || !on_chain(r.dest_junction))
            fail(Errc::invalid_value, ctx + ": source/dest junction not on the lane chain");
        if (net.route_index.count(r.id)) fail(Errc::invalid_value, "duplicate route id " + r.id);
        net.route_index[r.id] = static_cast<int>(net.routes.size());
        net.routes.push_back(r);
    }

    // merging is out of model scope: a lane may follow at most one lane
    {
        std::unordered_map<int, int> predecessor;
        for (const Route& r : net.routes) {
            for (size_t i = 0; i + 1 < r.lanes.size(); ++i) {
                auto [it, fresh] = predecessor.emplace(r.lanes[i + 1], r.lanes[i]);
                if (!fresh && it->second != r.lanes[i])
                    fail(Errc::invalid_value,
                         "lane " + net.lanes[r.lanes[i + 1]].id + " has two predecessors");
            }
        }
    }

    // --- detectors ---
    if (jnet.contains("detectors")) {
        std::set<std::string> ids;
        for (const auto& jd : jnet.at("detectors")) {
            Detector d;
            d.id = req_str(jd, "id", "detector");
            d.lane = net.lane_of(req_str(jd, "lane", "detector " + d.id));
            d.offset = req_num(jd, "offset", "detector " + d.id);
            if (d.offset < 0 || d.offset > net.lanes[d.lane].length)
                fail(Errc::invalid_value, "detector " + d.id + ": offset outside lane");
            const std::string kind = req_str(jd, "kind", "detector " + d.id);
            if (kind == "entry") d.kind = DetectorKind::Entry;
            else if (kind == "exit") d.kind = DetectorKind::Exit;
            else fail(Errc::invalid_value, "detector " + d.id + ": kind must be entry|exit");
            if (!ids.insert(d.id).second)
                fail(Errc::invalid_value, "duplicate detector id " + d.id);
            net.detectors.push_back(d);
        }
    }

    // --- vehicles ---
    if (doc.contains("vehicles")) {
        const json& jv = doc.at("vehicles");
        if (jv.contains("passenger"))
            detail::parse_vehicle_params(jv.at("passenger"), cfg.passenger, "passenger");
        if (jv.contains("emergency"))
            detail::parse_vehicle_params(jv.at("emergency"), cfg.emergency, "emergency");
    }
    if (!(cfg.emergency.v_max > cfg.passenger.v_max))
        fail(Errc::invalid_value, "emergency v_max must exceed passenger v_max");

    // --- demand ---
    if (doc.contains("demand")) {
        for (const auto& jf : doc.at("demand")) {
            DemandFlow f;
            f.route = net.route_of(req_str(jf, "route", "flow"));
            f.start = req_num(jf, "start", "flow");
            f.headway = req_num(jf, "headway", "flow");
            f.count = static_cast<int>(req_num(jf, "count", "flow"));
            if (f.start < 0 || f.headway <= 0 || f.count < 1)
                fail(Errc::invalid_value, "flow on route " + net.routes[f.route].id +
                                              ": start >= 0, headway > 0, count >= 1 required");
            if (jf.contains("kind")) {
                const std::string k = jf.at("kind").get<std::string>();
                if (k == "passenger") f.kind = VehicleKind::Passenger;
                else if (k == "emergency") f.kind = VehicleKind::Emergency;
                else fail(Errc::invalid_value, "flow kind must be passenger|emergency");
            }
            if (jf.contains("jitter")) f.jitter = jf.at("jitter").get<bool>();
            cfg.flows.push_back(f);
        }
    }

    // --- sim ---
    {
        const json& js = doc.at("sim");
        cfg.sim.dt = req_num(js, "dt", "sim");
        cfg.sim.duration = req_num(js, "duration", "sim");
        if (cfg.sim.dt <= 0) fail(Errc::invalid_value, "sim.dt must be > 0");
        if (cfg.sim.duration <= 0) fail(Errc::invalid_value, "sim.duration must be > 0");
        if (js.contains("seed")) cfg.sim.seed = js.at("seed").get<std::uint64_t>();
        if (js.contains("bus_latency_ticks")) {
            cfg.sim.bus_latency_ticks = js.at("bus_latency_ticks").get<int>();
            if (cfg.sim.bus_latency_ticks < 0)
                fail(Errc::invalid_value, "sim.bus_latency_ticks must be >= 0");
        }
        if (js.contains("mode")) cfg.sim.mode = mode_from_name(js.at("mode").get<std::string>());
    }

    // --- junction pools, conflicts, signal programs ---
    {
        size_t ji = 0;
        for (const auto& jj : doc.at("network").at("junctions")) {
            Junction& j = net.junctions[ji++];
            if (jj.contains("conflicts")) {
                for (const auto& jp : jj.at("conflicts")) {
                    if (!jp.is_array() || jp.size() != 2)
                        fail(Errc::syntax_error, "junction " + j.id + ": conflict must be a pair");
                    int a = net.lane_of(jp[0].get<std::string>());
                    int b = net.lane_of(jp[1].get<std::string>());
                    if (a == b) fail(Errc::invalid_value, j.id + ": approach conflicts with itself");
                    bool a_ok = false, b_ok = false;
                    for (int ap : j.approaches) {
                        a_ok |= (ap == a);
                        b_ok |= (ap == b);
                    }
                    if (!a_ok || !b_ok)
                        fail(Errc::dangling_reference,
                             j.id + ": conflict names a lane that is not an approach");
                    j.conflicts.emplace_back(a, b);
                }
            }
            if (jj.contains("pool")) {
                Pool pool;
                pool.area = req_num(jj.at("pool"), "area", "pool of " + j.id);
                pool.capacity = pool_capacity(pool.area);
                if (jj.at("pool").contains("capacity")) {
                    const int declared = jj.at("pool").at("capacity").get<int>();
                    if (declared != pool.capacity)
                        fail(Errc::capacity_mismatch,
                             j.id + ": declared pool capacity " + std::to_string(declared) +
                                 " != computed " + std::to_string(pool.capacity));
                }
                if (pool.capacity < 1)
                    fail(Errc::invalid_value, j.id + ": pool capacity must be >= 1");
                for (int li : j.approaches) {
                    const Crossing* c = net.lanes[li].crossing_at(
                        static_cast<int>(&j - net.junctions.data()));
                    pool.intervals.push_back({li, c->stop_offset, c->interior_end});
                }
                if (pool.intervals.empty())
                    fail(Errc::invalid_value, j.id + ": pool without any approach crossing");
                j.pool = pool;
            }
            if (jj.contains("signal")) {
                const json& jsig = jj.at("signal");
                SignalProgram prog;
                if (jsig.contains("anchor")) j.schedule_anchor = jsig.at("anchor").get<double>();
                for (const auto& jp : jsig.at("phases")) {
                    Phase p;
                    p.duration = req_num(jp, "duration", j.id + " phase");
                    for (const auto& [laneId, col] : jp.at("colors").items())
                        p.colors[net.lane_of(laneId)] =
                            color_from_letter(col.get<std::string>().at(0));
                    prog.phases.push_back(p);
                }
                validate_program(prog, j.conflicts);
                j.program = prog;
            } else if (!j.approaches.empty()) {
                std::map<int, double> share;
                for (const DemandFlow& f : cfg.flows)
                    for (int li : net.routes[f.route].lanes)
                        share[li] += f.count;
                j.program = default_program(j.approaches, j.conflicts, share);
                validate_program(*j.program, j.conflicts);
            }
        }
    }

    // physics keeps one rear-spill level per vehicle, so lanes must be
    // at least one vehicle long
    const double min_len = std::max(cfg.passenger.length, cfg.emergency.length);
    for (const Lane& l : net.lanes)
        if (l.length < min_len)
            fail(Errc::invalid_value, "lane " + l.id + " shorter than a vehicle");

    return cfg;
}

/// Canonical re-serialization; parse(serialize(cfg)) is identical to cfg.
inline std::string serialize_scenario(const ScenarioConfig& cfg) {
    using nlohmann::json;
    const Network& net = cfg.network;
    json doc;

    json jzones = json::array();
    for (const ZoneSpec& z : net.zones)
        jzones.push_back({{"center", {z.center.x, z.center.y}},
                          {"control_radius", z.control_radius},
                          {"surveillance_radius", z.surveillance_radius}});

    json jjunctions = json::array();
    for (const Junction& j : net.junctions) {
        json jj = {{"id", j.id}, {"center", {j.center.x, j.center.y}}, {"zone", j.zone}};
        if (!j.conflicts.empty()) {
            json jc = json::array();
            for (const auto& [a, b] : j.conflicts)
                jc.push_back({net.lanes[a].id, net.lanes[b].id});
            jj["conflicts"] = jc;
        }
        if (j.pool) jj["pool"] = {{"area", j.pool->area}, {"capacity", j.pool->capacity}};
        if (j.program) {
            json jphases = json::array();
            for (const Phase& p : j.program->phases) {
                json jcolors = json::object();
                for (const auto& [lane, col] : p.colors)
                    jcolors[net.lanes[lane].id] = std::string(1, color_letter(col));
                jphases.push_back({{"duration", p.duration}, {"colors", jcolors}});
            }
            jj["signal"] = {{"anchor", j.schedule_anchor}, {"phases", jphases}};
        }
        jjunctions.push_back(jj);
    }

    json jlanes = json::array();
    for (const Lane& l : net.lanes) {
        json jl = {{"id", l.id},
                   {"from", net.junctions[l.from_junction].id},
                   {"to", net.junctions[l.to_junction].id},
                   {"length", l.length},
                   {"angle", l.approach_angle},
                   {"max_occupancy", l.max_occ}};
        if (std::isfinite(l.speed_limit)) jl["speed_limit"] = l.speed_limit;
        if (l.parallel >= 0) jl["parallel"] = net.lanes[l.parallel].id;
        if (!l.crossings.empty()) {
            json jc = json::array();
            for (const Crossing& c : l.crossings)
                jc.push_back({{"junction", net.junctions[c.junction].id},
                              {"stop_offset", c.stop_offset},
                              {"interior_end", c.interior_end}});
            jl["crossings"] = jc;
        }
        jlanes.push_back(jl);
    }

    json jroutes = json::array();
    for (const Route& r : net.routes) {
        json jl = json::array();
        for (int li : r.lanes) jl.push_back(net.lanes[li].id);
        jroutes.push_back({{"id", r.id},
                           {"source", net.junctions[r.source_junction].id},
                           {"dest", net.junctions[r.dest_junction].id},
                           {"lanes", jl}});
    }

    json jdetectors = json::array();
    for (const Detector& d : net.detectors)
        jdetectors.push_back({{"id", d.id},
                              {"lane", net.lanes[d.lane].id},
                              {"offset", d.offset},
                              {"kind", d.kind == DetectorKind::Entry ? "entry" : "exit"}});

    json jflows = json::array();
    for (const DemandFlow& f : cfg.flows)
        jflows.push_back({{"route", net.routes[f.route].id},
                          {"start", f.start},
                          {"headway", f.headway},
                          {"count", f.count},
                          {"kind", kind_name(f.kind)},
                          {"jitter", f.jitter}});

    auto jparams = [](const VehicleParams& p) {
        return json{{"length", p.length}, {"accel", p.accel}, {"decel", p.decel},
                    {"v_max", p.v_max}, {"tau", p.tau}};
    };

    doc["network"] = {{"zones", jzones},
                      {"junctions", jjunctions},
                      {"lanes", jlanes},
                      {"routes", jroutes},
                      {"detectors", jdetectors}};
    doc["demand"] = jflows;
    doc["vehicles"] = {{"passenger", jparams(cfg.passenger)}, {"emergency", jparams(cfg.emergency)}};
    doc["sim"] = {{"dt", cfg.sim.dt},
                  {"duration", cfg.sim.duration},
                  {"seed", cfg.sim.seed},
                  {"bus_latency_ticks", cfg.sim.bus_latency_ticks},
                  {"mode", mode_name(cfg.sim.mode)}};
    return doc.dump(2) + "\n";
}

/// FNV-1a over the canonical serialization with mode and seed normalized
/// out; equal fingerprints mean "same network + demand + physics".
inline std::uint64_t config_fingerprint(const ScenarioConfig& cfg) {
    ScenarioConfig c = cfg;
    c.sim.mode = Mode::Baseline;
    c.sim.seed = 0;
    const std::string s = serialize_scenario(c);
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace v2i
