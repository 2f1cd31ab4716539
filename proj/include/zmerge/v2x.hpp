#pragma once

#include <vector>

#include "zmerge/sim.hpp"

namespace zmerge {

// One surrounding-vehicle report received over V2V.
struct NeighborRecord {
    double speed = 0.0;
    double accel = 0.0;
    double lane = 0.0;
    double time_to_merge = 0.0;
    double distance_to_ego = 0.0;
};

// Zone traffic summary broadcast by the roadside unit: exactly 8 payload
// scalars plus the tick stamp.
struct GlobalSummary {
    ZoneStats premerging;
    ZoneStats merging;
    ZoneStats ramp;
    int queue_premerge = 0;
    int queue_accel = 0;
    long tick = 0;
};

// Vehicles within V2V range of the ego, nearest first, at most
// cfg.max_neighbors entries; the ego itself is never included.
std::vector<NeighborRecord> visible_neighbors(const World& world, const Vehicle& ego);

GlobalSummary rsu_broadcast(const World& world);

}  // namespace zmerge
