#include "zmerge/road.hpp"

#include <cmath>
#include <stdexcept>

#include "zmerge/vehicle.hpp"

namespace zmerge {

const char* zone_name(ZoneId z) {
    switch (z) {
        case ZoneId::Warmup: return "warmup";
        case ZoneId::PreMerging: return "premerging";
        case ZoneId::Merging: return "merging";
        case ZoneId::Ramp: return "ramp";
    }
    return "?";
}

RoadNetwork RoadNetwork::build(const SimConfig& cfg) {
    if (cfg.warmup_len <= 0 || cfg.premerge_len <= 0 || cfg.merge_len <= 0 ||
        cfg.ramp_len <= 0 || cfg.exit_buffer_len < 0) {
        throw std::invalid_argument("road: zone lengths must be positive");
    }
    if (cfg.mainline_lanes < 1) {
        throw std::invalid_argument("road: need at least one mainline lane");
    }
    if (cfg.ramp_len > cfg.warmup_len + cfg.premerge_len) {
        throw std::invalid_argument("road: ramp feeder extends past the segment origin");
    }
    RoadNetwork net;
    net.warmup_len_ = cfg.warmup_len;
    net.premerge_len_ = cfg.premerge_len;
    net.merge_len_ = cfg.merge_len;
    net.ramp_len_ = cfg.ramp_len;
    net.exit_buffer_len_ = cfg.exit_buffer_len;
    net.mainline_lanes_ = cfg.mainline_lanes;
    net.lane_width_ = cfg.lane_width;
    return net;
}

bool RoadNetwork::lane_exists(LaneId lane, double pos) const {
    if (lane >= 1 && lane <= mainline_lanes_) {
        return pos >= 0.0 && pos <= segment_end();
    }
    if (lane == kRampLane) {
        // feeder plus acceleration lane; ends hard at the merge point
        return pos >= ramp_start() && pos <= merge_point();
    }
    return false;
}

ZoneId RoadNetwork::zone_of(double pos, LaneId lane) const {
    if (!lane_exists(lane, pos)) {
        throw std::out_of_range("zone_of: position outside the segment");
    }
    if (lane == kRampLane) {
        return pos < merge_zone_start() ? ZoneId::Ramp : ZoneId::Merging;
    }
    if (pos < premerge_start()) return ZoneId::Warmup;
    if (pos < merge_zone_start()) return ZoneId::PreMerging;
    // positions in the exit buffer classify with the last zone
    return ZoneId::Merging;
}

double RoadNetwork::zone_length(ZoneId z) const {
    switch (z) {
        case ZoneId::Warmup: return warmup_len_;
        case ZoneId::PreMerging: return premerge_len_;
        case ZoneId::Merging: return merge_len_;
        case ZoneId::Ramp: return ramp_len_;
    }
    return 0.0;
}

int RoadNetwork::lanes_in_zone(ZoneId z) const {
    switch (z) {
        case ZoneId::Warmup:
        case ZoneId::PreMerging: return mainline_lanes_;
        case ZoneId::Merging: return mainline_lanes_ + 1;  // acceleration lane spans it
        case ZoneId::Ramp: return 1;
    }
    return 0;
}

double RoadNetwork::distance_to_merge_point(const Vehicle& v) const {
    return std::max(0.0, merge_point() - v.pos);
}

GeoPoint RoadNetwork::to_geo(double pos, LaneId lane) const {
    const double lateral = lane_width_ * static_cast<double>(lane);
    return GeoPoint{lateral / kEarthRadiusM, pos / kEarthRadiusM};
}

double RoadNetwork::metric_distance(double pos_a, LaneId lane_a,
                                    double pos_b, LaneId lane_b) const {
    return haversine_distance(to_geo(pos_a, lane_a), to_geo(pos_b, lane_b));
}

}  // namespace zmerge
