#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "v2i/engine.hpp"

namespace v2i {

/// Accumulated time spent below the desired speed, one clamped term per
/// dt sample.
inline double time_loss(const std::vector<double>& interval_speeds, double v_desired, double dt) {
    if (interval_speeds.empty()) fail(Errc::empty_trajectory, "no samples");
    if (v_desired <= 0) fail(Errc::invalid_value, "v_desired must be > 0");
    double loss = 0;
    for (double v : interval_speeds) loss += std::max(0.0, 1.0 - v / v_desired) * dt;
    return loss;
}

inline double travel_time(double depart, double arrive) {
    if (arrive < depart) fail(Errc::negative_duration, "arrive before depart");
    return arrive - depart;
}

/// Speed over mean acceleration. Reported as a diagnostic column next to
/// the measured travel time, never substituted for it.
inline double eq1_travel_time(double mean_speed, double mean_accel) {
    if (mean_accel <= 0) fail(Errc::zero_acceleration, "mean acceleration must be > 0");
    return mean_speed / mean_accel;
}

inline double round2(double x) { return std::round(x * 100.0) / 100.0; }

/// Relative improvement of `scenario` over `current`, rounded to two
/// decimals for reporting.
inline double reduction_pct(double current, double scenario) {
    if (current <= 0) fail(Errc::zero_baseline, "current value must be > 0");
    return round2((current - scenario) / current * 100.0);
}

struct VehicleMetrics {
    int vehicle = -1;
    VehicleKind kind = VehicleKind::Passenger;
    int route = -1;
    double depart = 0;
    double arrive = 0;
    double travel_time = 0;
    double time_loss = 0;
    double mean_speed = 0;
    double mean_abs_accel = 0;
};

/// Per-vehicle metrics of every arrived vehicle, computed from the
/// quantized trace (replay uses exactly the same inputs).
inline std::vector<VehicleMetrics> compute_vehicle_metrics(const ScenarioConfig& cfg,
                                                           const RunResult& run) {
    std::map<int, std::vector<const TraceSample*>> by_vehicle;
    for (const TraceSample& s : run.trace) by_vehicle[s.vehicle].push_back(&s);

    std::vector<VehicleMetrics> out;
    for (const Vehicle& veh : run.vehicles) {
        if (!veh.arrive) continue;
        const auto& samples = by_vehicle[veh.id];
        VehicleMetrics m;
        m.vehicle = veh.id;
        m.kind = veh.kind;
        m.route = veh.route;
        m.depart = veh.depart;
        m.arrive = *veh.arrive;
        m.travel_time = travel_time(m.depart, m.arrive);
        std::vector<double> speeds;
        for (size_t i = 1; i < samples.size(); ++i) speeds.push_back(samples[i]->speed());
        if (speeds.empty()) speeds.push_back(samples.empty() ? 0.0 : samples.back()->speed());
        m.time_loss = time_loss(speeds, veh.v_desired, run.dt);
        double sum = 0;
        for (double v : speeds) sum += v;
        m.mean_speed = sum / speeds.size();
        double accel = 0;
        int pairs = 0;
        for (size_t i = 1; i < samples.size(); ++i) {
            accel += std::abs(samples[i]->speed() - samples[i - 1]->speed()) / run.dt;
            ++pairs;
        }
        m.mean_abs_accel = pairs ? accel / pairs : 0.0;
        out.push_back(m);
        (void)cfg;
    }
    return out;
}

struct SummaryRow {
    std::string scope;  // "all", "route:<id>", "junction:<id>"
    std::string kind;   // "all", "passenger", "emergency"
    double count = 0;
    double mean_speed = 0;
    double mean_abs_accel = 0;
    double time_loss = 0;
    double travel_time = 0;
};

struct RunSummary {
    Mode mode = Mode::Baseline;
    std::uint64_t fingerprint = 0;
    int reps = 1;
    double vehicle_count = 0;  // spawned, averaged over reps
    double arrived = 0;
    bool deadlock = false;
    double deadlock_rate = 0;
    double deadlock_time = -1;  // first over reps where flagged
    std::vector<SummaryRow> rows;

    const SummaryRow* row(const std::string& scope, const std::string& kind) const {
        for (const SummaryRow& r : rows)
            if (r.scope == scope && r.kind == kind) return &r;
        return nullptr;
    }
};

inline RunSummary build_summary(const ScenarioConfig& cfg, const RunResult& run) {
    const Network& net = cfg.network;
    const std::vector<VehicleMetrics> metrics = compute_vehicle_metrics(cfg, run);

    std::vector<std::string> scopes;
    scopes.push_back("all");
    for (const Route& r : net.routes) scopes.push_back("route:" + r.id);
    std::vector<int> junction_scopes;
    for (size_t ji = 0; ji < net.junctions.size(); ++ji) {
        bool crossed = false;
        for (const Lane& l : net.lanes)
            for (const Crossing& c : l.crossings) crossed |= (c.junction == static_cast<int>(ji));
        if (crossed) {
            junction_scopes.push_back(static_cast<int>(ji));
            scopes.push_back("junction:" + net.junctions[ji].id);
        }
    }

    auto route_crosses = [&](int route, int junction) {
        for (int li : net.routes[route].lanes)
            for (const Crossing& c : net.lanes[li].crossings)
                if (c.junction == junction) return true;
        return false;
    };
    auto in_scope = [&](const VehicleMetrics& m, const std::string& scope) {
        if (scope == "all") return true;
        if (scope.rfind("route:", 0) == 0)
            return net.routes[m.route].id == scope.substr(6);
        const int ji = net.junction_of(scope.substr(9));
        return route_crosses(m.route, ji);
    };

    RunSummary sum;
    sum.mode = run.mode;
    sum.fingerprint = run.fingerprint;
    sum.vehicle_count = run.spawned;
    sum.arrived = run.arrived;
    sum.deadlock = run.deadlock;
    sum.deadlock_rate = run.deadlock ? 1.0 : 0.0;
    sum.deadlock_time = run.deadlock_time;

    const char* kinds[] = {"all", "passenger", "emergency"};
    for (const std::string& scope : scopes) {
        for (const char* kind : kinds) {
            SummaryRow row;
            row.scope = scope;
            row.kind = kind;
            for (const VehicleMetrics& m : metrics) {
                if (!in_scope(m, scope)) continue;
                if (std::string(kind) != "all" && std::string(kind) != kind_name(m.kind)) continue;
                row.count += 1;
                row.mean_speed += m.mean_speed;
                row.mean_abs_accel += m.mean_abs_accel;
                row.time_loss += m.time_loss;
                row.travel_time += m.travel_time;
            }
            if (row.count > 0) {
                row.mean_speed /= row.count;
                row.mean_abs_accel /= row.count;
                row.time_loss /= row.count;
                row.travel_time /= row.count;
            }
            sum.rows.push_back(row);
        }
    }
    return sum;
}

/// Equal-weight mean of per-repetition summaries.
inline RunSummary aggregate(const std::vector<RunSummary>& reps) {
    if (reps.empty()) fail(Errc::invalid_value, "no repetitions to aggregate");
    RunSummary agg = reps.front();
    agg.reps = 0;
    agg.vehicle_count = 0;
    agg.arrived = 0;
    agg.deadlock = false;
    agg.deadlock_rate = 0;
    agg.deadlock_time = -1;
    for (SummaryRow& r : agg.rows) r = SummaryRow{r.scope, r.kind};

    std::vector<double> row_reps(agg.rows.size(), 0);
    for (const RunSummary& s : reps) {
        if (s.fingerprint != agg.fingerprint || s.mode != agg.mode)
            fail(Errc::config_mismatch, "aggregating runs of different configs");
        agg.reps += s.reps;
        agg.vehicle_count += s.vehicle_count;
        agg.arrived += s.arrived;
        if (s.deadlock) {
            agg.deadlock = true;
            agg.deadlock_rate += 1;
            if (agg.deadlock_time < 0 || s.deadlock_time < agg.deadlock_time)
                agg.deadlock_time = s.deadlock_time;
        }
        for (size_t i = 0; i < agg.rows.size(); ++i) {
            const SummaryRow& r = s.rows[i];
            if (r.scope != agg.rows[i].scope || r.kind != agg.rows[i].kind)
                fail(Errc::config_mismatch, "summary row sets differ");
            if (r.count <= 0) continue;
            row_reps[i] += 1;
            agg.rows[i].count += r.count;
            agg.rows[i].mean_speed += r.mean_speed;
            agg.rows[i].mean_abs_accel += r.mean_abs_accel;
            agg.rows[i].time_loss += r.time_loss;
            agg.rows[i].travel_time += r.travel_time;
        }
    }
    const double n = static_cast<double>(reps.size());
    agg.vehicle_count /= n;
    agg.arrived /= n;
    agg.deadlock_rate /= n;
    for (size_t i = 0; i < agg.rows.size(); ++i) {
        if (row_reps[i] <= 0) continue;
        agg.rows[i].count /= row_reps[i];
        agg.rows[i].mean_speed /= row_reps[i];
        agg.rows[i].mean_abs_accel /= row_reps[i];
        agg.rows[i].time_loss /= row_reps[i];
        agg.rows[i].travel_time /= row_reps[i];
    }
    return agg;
}

struct CompareRow {
    std::string scope;
    std::string kind;
    double count_current = 0;
    double count_scenario = 0;
    double time_loss_current = 0;
    double time_loss_scenario = 0;
    double time_loss_reduction = std::nan("");
    double travel_current = 0;
    double travel_scenario = 0;
    double travel_reduction = std::nan("");
};

struct ComparisonReport {
    Mode current_mode = Mode::Baseline;
    Mode scenario_mode = Mode::Baseline;
    std::vector<CompareRow> rows;

    const CompareRow* row(const std::string& scope, const std::string& kind) const {
        for (const CompareRow& r : rows)
            if (r.scope == scope && r.kind == kind) return &r;
        return nullptr;
    }
};

/// Pairs two summaries of the same network + demand and applies the
/// reduction formula per scope; the overall rows average the per-route
/// reductions (mean of reductions, not reduction of means).
inline ComparisonReport compare(const RunSummary& current, const RunSummary& scenario) {
    if (current.fingerprint != scenario.fingerprint)
        fail(Errc::config_mismatch, "summaries come from different configs");
    ComparisonReport rep;
    rep.current_mode = current.mode;
    rep.scenario_mode = scenario.mode;

    for (const SummaryRow& rc : current.rows) {
        const SummaryRow* rs = scenario.row(rc.scope, rc.kind);
        if (!rs) continue;
        CompareRow row;
        row.scope = rc.scope;
        row.kind = rc.kind;
        row.count_current = rc.count;
        row.count_scenario = rs->count;
        row.time_loss_current = rc.time_loss;
        row.time_loss_scenario = rs->time_loss;
        row.travel_current = rc.travel_time;
        row.travel_scenario = rs->travel_time;
        if (rc.count > 0 && rs->count > 0) {
            if (rc.time_loss > 0)
                row.time_loss_reduction = reduction_pct(rc.time_loss, rs->time_loss);
            if (rc.travel_time > 0)
                row.travel_reduction = reduction_pct(rc.travel_time, rs->travel_time);
        }
        rep.rows.push_back(row);
    }

    const char* kinds[] = {"all", "passenger", "emergency"};
    for (const char* kind : kinds) {
        CompareRow overall;
        overall.scope = "overall";
        overall.kind = kind;
        int n_tl = 0, n_tt = 0;
        double tl = 0, tt = 0;
        for (const CompareRow& r : rep.rows) {
            if (r.kind != kind || r.scope.rfind("route:", 0) != 0) continue;
            if (!std::isnan(r.time_loss_reduction)) {
                tl += r.time_loss_reduction;
                ++n_tl;
            }
            if (!std::isnan(r.travel_reduction)) {
                tt += r.travel_reduction;
                ++n_tt;
            }
        }
        if (n_tl) overall.time_loss_reduction = round2(tl / n_tl);
        if (n_tt) overall.travel_reduction = round2(tt / n_tt);
        if (n_tl || n_tt) rep.rows.push_back(overall);
    }
    return rep;
}

}  // namespace v2i
