#pragma once

#include <cstdarg>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "v2i/metrics.hpp"

namespace v2i {

inline std::string strfmt(const char* format, ...) {
    char buf[512];
    va_list args;
    va_start(args, format);
    vsnprintf(buf, sizeof(buf), format, args);
    va_end(args);
    return buf;
}

inline std::string num3(double v) { return strfmt("%.3f", v); }
inline std::string num2_or_blank(double v) { return std::isnan(v) ? "" : strfmt("%.2f", v); }

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(Errc::io_error, "cannot write " + path);
    out << content;
    if (!out) fail(Errc::io_error, "short write to " + path);
}

struct RepMetrics {
    std::uint64_t seed = 0;
    std::vector<VehicleMetrics> vehicles;
};

inline std::string csv_vehicles(const ScenarioConfig& cfg, const std::vector<RepMetrics>& reps) {
    std::string out =
        "rep,seed,vehicle,kind,route,depart,arrive,travel_time,time_loss,mean_speed,mean_abs_accel\n";
    for (size_t rep = 0; rep < reps.size(); ++rep) {
        for (const VehicleMetrics& m : reps[rep].vehicles) {
            out += strfmt("%zu,%llu,%d,%s,%s,", rep, (unsigned long long)reps[rep].seed,
                          m.vehicle, kind_name(m.kind), cfg.network.routes[m.route].id.c_str());
            out += num3(m.depart) + "," + num3(m.arrive) + "," + num3(m.travel_time) + "," +
                   num3(m.time_loss) + "," + num3(m.mean_speed) + "," + num3(m.mean_abs_accel) +
                   "\n";
        }
    }
    return out;
}

inline std::string csv_summary_rows(const std::vector<RunSummary>& reps,
                                    const std::vector<std::uint64_t>& seeds,
                                    const RunSummary& agg) {
    std::string out =
        "rep,seed,scope,kind,count,mean_speed,mean_abs_accel,time_loss,travel_time,eq1_travel_time\n";
    auto emit = [&](const std::string& rep, const std::string& seed, const RunSummary& s) {
        for (const SummaryRow& r : s.rows) {
            std::string eq1;
            if (r.count > 0 && r.mean_abs_accel > 0)
                eq1 = num3(eq1_travel_time(r.mean_speed, r.mean_abs_accel));
            out += rep + "," + seed + "," + r.scope + "," + r.kind + "," +
                   strfmt("%.1f", r.count) + "," + num3(r.mean_speed) + "," +
                   num3(r.mean_abs_accel) + "," + num3(r.time_loss) + "," +
                   num3(r.travel_time) + "," + eq1 + "\n";
        }
    };
    for (size_t i = 0; i < reps.size(); ++i)
        emit(strfmt("%zu", i), strfmt("%llu", (unsigned long long)seeds[i]), reps[i]);
    emit("mean", "-", agg);
    return out;
}

inline std::string csv_comparison(const ComparisonReport& rep) {
    std::string out = "scope,kind,metric,current,scenario,reduction_pct\n";
    for (const CompareRow& r : rep.rows) {
        if (r.scope == "overall") {
            out += r.scope + "," + r.kind + ",time_loss,,," + num2_or_blank(r.time_loss_reduction) +
                   "\n";
            out += r.scope + "," + r.kind + ",travel_time,,," + num2_or_blank(r.travel_reduction) +
                   "\n";
            continue;
        }
        out += r.scope + "," + r.kind + ",time_loss," + num3(r.time_loss_current) + "," +
               num3(r.time_loss_scenario) + "," + num2_or_blank(r.time_loss_reduction) + "\n";
        out += r.scope + "," + r.kind + ",travel_time," + num3(r.travel_current) + "," +
               num3(r.travel_scenario) + "," + num2_or_blank(r.travel_reduction) + "\n";
    }
    return out;
}

inline std::string summary_text(const ScenarioConfig& cfg, const RunSummary& agg,
                                const ComparisonReport* comparison) {
    std::string out;
    out += "mode: " + std::string(mode_name(agg.mode)) + "\n";
    out += strfmt("repetitions: %d\n", agg.reps);
    out += strfmt("vehicles spawned (mean/rep): %.1f\n", agg.vehicle_count);
    out += strfmt("vehicles arrived (mean/rep): %.1f\n", agg.arrived);
    out += strfmt("deadlock observed: %s (rate %.2f%s)\n", agg.deadlock ? "yes" : "no",
                  agg.deadlock_rate,
                  agg.deadlock ? strfmt(", first at %.1f s", agg.deadlock_time).c_str() : "");
    out += "\nper-scope averages (all vehicles):\n";
    for (const SummaryRow& r : agg.rows) {
        if (r.kind != "all" || r.count <= 0) continue;
        out += strfmt("  %-24s n=%-6.1f speed=%7.3f m/s  accel=%6.3f m/s^2  time_loss=%9.3f s  "
                      "travel=%9.3f s\n",
                      r.scope.c_str(), r.count, r.mean_speed, r.mean_abs_accel, r.time_loss,
                      r.travel_time);
    }
    if (comparison) {
        out += "\nreductions vs current case (Eq. 2):\n";
        for (const CompareRow& r : comparison->rows) {
            if (std::isnan(r.time_loss_reduction) && std::isnan(r.travel_reduction)) continue;
            out += strfmt("  %-24s %-10s time_loss %-8s travel_time %-8s\n", r.scope.c_str(),
                          r.kind.c_str(), (num2_or_blank(r.time_loss_reduction) + "%").c_str(),
                          (num2_or_blank(r.travel_reduction) + "%").c_str());
        }
    }
    (void)cfg;
    return out;
}

}  // namespace v2i
