#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

namespace zmerge {

inline constexpr double kEarthRadiusM = 6'371'000.0;

// speeds below this are clamped when converting distance to travel time
inline constexpr double kEpsSpeed = 0.1;

// returned by time_to_collision when the bumper gap is already negative,
// i.e. the vehicles overlap; distinct from any valid TTC (those are >= 0)
inline constexpr double kCollisionGap = -1.0;

struct GeoPoint {
    double lat;  // radians, [-pi/2, pi/2]
    double lon;  // radians, [-pi, pi]
};

// leader/follower pair in one lane, longitudinal coordinates
struct KinematicPair {
    double leader_pos;    // m
    double leader_len;    // m, > 0
    double leader_speed;  // m/s
    double follower_pos;  // m
    double follower_speed;  // m/s
};

// great-circle distance between two points on the mean-radius sphere
inline double haversine_distance(const GeoPoint& a, const GeoPoint& b) {
    const double dphi = a.lat - b.lat;
    const double dlambda = a.lon - b.lon;
    const double s1 = std::sin(dphi / 2.0);
    const double s2 = std::sin(dlambda / 2.0);
    const double h = s1 * s1 + std::cos(a.lat) * std::cos(b.lat) * s2 * s2;
    return 2.0 * kEarthRadiusM * std::asin(std::sqrt(std::min(1.0, h)));
}

// bumper-to-bumper closing time; +inf when the follower is not closing,
// kCollisionGap when the pair already overlaps
inline double time_to_collision(const KinematicPair& p) {
    const double gap = p.leader_pos - p.follower_pos - p.leader_len;
    if (gap < 0.0) return kCollisionGap;
    if (p.follower_speed <= p.leader_speed) {
        return std::numeric_limits<double>::infinity();
    }
    return gap / (p.follower_speed - p.leader_speed);
}

inline double time_to_point(double distance, double speed) {
    return distance / std::max(speed, kEpsSpeed);
}

}  // namespace zmerge
