#pragma once

#include <stdexcept>
#include <string>

namespace v2i {

enum class Errc {
    syntax_error,
    dangling_reference,
    invalid_value,
    capacity_mismatch,
    offset_out_of_range,
    unknown_approach,
    incomplete_color_map,
    conflicting_green,
    not_in_override,
    unknown_sender,
    duplicate_registration,
    mission_unknown,
    no_parallel_lane,
    empty_trajectory,
    negative_duration,
    zero_acceleration,
    zero_baseline,
    config_mismatch,
    corrupt_trace,
    io_error,
    invariant_violation,
};

inline const char* errc_name(Errc c) {
    switch (c) {
        case Errc::syntax_error: return "SyntaxError";
        case Errc::dangling_reference: return "DanglingReference";
        case Errc::invalid_value: return "InvalidValue";
        case Errc::capacity_mismatch: return "CapacityMismatch";
        case Errc::offset_out_of_range: return "OffsetOutOfRange";
        case Errc::unknown_approach: return "UnknownApproach";
        case Errc::incomplete_color_map: return "IncompleteColorMap";
        case Errc::conflicting_green: return "ConflictingGreen";
        case Errc::not_in_override: return "NotInOverride";
        case Errc::unknown_sender: return "UnknownSender";
        case Errc::duplicate_registration: return "DuplicateRegistration";
        case Errc::mission_unknown: return "MissionUnknown";
        case Errc::no_parallel_lane: return "NoParallelLane";
        case Errc::empty_trajectory: return "EmptyTrajectory";
        case Errc::negative_duration: return "NegativeDuration";
        case Errc::zero_acceleration: return "ZeroAcceleration";
        case Errc::zero_baseline: return "ZeroBaseline";
        case Errc::config_mismatch: return "ConfigMismatch";
        case Errc::corrupt_trace: return "CorruptTrace";
        case Errc::io_error: return "IoError";
        case Errc::invariant_violation: return "InvariantViolation";
    }
    return "UnknownError";
}

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& msg)
        : std::runtime_error(std::string(errc_name(code)) + ": " + msg), code_(code) {}

    Errc code() const { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& msg) { throw Error(code, msg); }

}  // namespace v2i
