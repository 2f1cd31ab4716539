#pragma once

#include <cstdint>
#include <vector>

#include "zmerge/road.hpp"

namespace zmerge {

using VehicleId = std::uint64_t;

enum class Role { AV, HV };
enum class Route { Mainline, Ramp };

// One simulated vehicle. `pos` is the front bumper in segment coordinates.
struct Vehicle {
    VehicleId id = 0;
    Role role = Role::HV;
    Route route = Route::Mainline;
    LaneId lane = 1;
    double pos = 0.0;
    double speed = 0.0;   // m/s, [0, v_max]
    double accel = 0.0;   // applied last tick, m/s^2
    double length = 5.0;
    double desired_gap = 10.0;  // active gap setpoint, m
    long spawn_tick = 0;

    // per-tick AV command state
    bool has_commanded_accel = false;
    double commanded_accel = 0.0;
    int lane_change_intent = 0;  // -1 right, +1 left, 0 none

    // set during step() when a lateral jump executes
    bool changed_lane_this_tick = false;
    double lane_change_gap = 0.0;  // min bumper gap in the target lane at change time

    long last_lane_change_tick = -1'000'000;
    double stalled_at_end_s = 0.0;  // time spent nearly stopped at the accel-lane end

    bool merged = false;  // ramp-origin vehicle that has reached a mainline lane
};

enum class SimEventType { Collision, Exit, Spawn, Deadlock, LaneChange };

struct SimEvent {
    SimEventType type;
    long tick = 0;
    VehicleId a = 0;
    VehicleId b = 0;  // second participant for collisions
};

const char* event_name(SimEventType t);

}  // namespace zmerge
