#pragma once

// Reference data from the Saeb Salam field study the simulator replicates:
// per-route lane lengths and occupancies, recorded average time loss /
// travel time for the static-signal case and each control scenario, and
// the published percentage reductions.

namespace v2i::reference {

struct RouteRow {
    const char* id;
    const char* source_junction;
    const char* dest_junction;
    double lane_length;       // m
    int occupancy;            // vehicles
    double time_loss_current;     // s
    double time_loss_scenario;    // s
    double travel_current;        // s
    double travel_scenario;       // s
    double time_loss_reduction;   // published %
    double travel_reduction;      // published %
};

inline constexpr RouteRow kRoutes[4] = {
    {"1", "393948024", "6555914051", 101.52, 20, 41.16, 19.99, 59.96, 39.53, 51.43, 34.07},
    {"2", "393948024", "2356356625", 223.94, 44, 78.991, 38.997, 111.97, 73.62, 50.63, 33.98},
    {"3", "287640809", "287623849", 136.96, 27, 72.04, 30.43, 90.29, 47.76, 57.76, 47.10},
    {"4", "393912045", "2356356625", 168.32, 33, 58.96, 29.13, 75.386, 49.97, 50.59, 33.71},
};

struct JunctionRow {
    const char* id;
    int pool_capacity;
    double time_loss_current;
    double time_loss_scenario;
    double travel_current;
    double travel_scenario;
    double time_loss_reduction;
    double travel_reduction;
};

inline constexpr JunctionRow kJunction = {"393948023", 5,      451.32, 222.79,
                                          467.94,      256.59, 50.64,  45.17};

inline constexpr double kPoolArea = 40.96;              // m^2
inline constexpr double kOverallTimeLossReduction = 52.6;  // % (mean of the route column)

}  // namespace v2i::reference
