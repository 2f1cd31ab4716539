#pragma once

#include "zmerge/config.hpp"
#include "zmerge/geo.hpp"

namespace zmerge {

// Lane indexing: 0 is the ramp feeder / acceleration lane, 1..mainline_lanes
// are mainline lanes with 1 the rightmost (adjacent to the acceleration lane).
using LaneId = int;
inline constexpr LaneId kRampLane = 0;

enum class ZoneId { Warmup, PreMerging, Merging, Ramp };

const char* zone_name(ZoneId z);

struct Vehicle;  // vehicle.hpp

// Static segment geometry. Longitudinal coordinate runs 0 at the mainline
// entry to segment_end at the exit; the ramp feeder is embedded in the same
// coordinate, ending where the acceleration lane begins.
class RoadNetwork {
public:
    static RoadNetwork build(const SimConfig& cfg);

    double warmup_len() const { return warmup_len_; }
    double premerge_len() const { return premerge_len_; }
    double merge_len() const { return merge_len_; }
    double ramp_len() const { return ramp_len_; }
    int mainline_lanes() const { return mainline_lanes_; }
    double lane_width() const { return lane_width_; }

    double premerge_start() const { return warmup_len_; }
    double merge_zone_start() const { return warmup_len_ + premerge_len_; }
    // end of the acceleration lane; ramp traffic must have merged by here
    double merge_point() const { return merge_zone_start() + merge_len_; }
    double segment_end() const { return merge_point() + exit_buffer_len_; }
    double ramp_start() const { return merge_zone_start() - ramp_len_; }

    bool on_accel_lane(LaneId lane, double pos) const {
        return lane == kRampLane && pos >= merge_zone_start();
    }
    bool on_ramp_feeder(LaneId lane, double pos) const {
        return lane == kRampLane && pos < merge_zone_start();
    }
    bool lane_exists(LaneId lane, double pos) const;

    ZoneId zone_of(double pos, LaneId lane) const;

    double zone_length(ZoneId z) const;
    int lanes_in_zone(ZoneId z) const;

    double distance_to_merge_point(const Vehicle& v) const;

    // maps lane coordinates onto the sphere near (0, 0) so that spherical
    // distances reproduce the planar lane metric
    GeoPoint to_geo(double pos, LaneId lane) const;
    double metric_distance(double pos_a, LaneId lane_a, double pos_b, LaneId lane_b) const;

private:
    double warmup_len_ = 0, premerge_len_ = 0, merge_len_ = 0;
    double ramp_len_ = 0, exit_buffer_len_ = 0, lane_width_ = 3.5;
    int mainline_lanes_ = 0;
};

}  // namespace zmerge
