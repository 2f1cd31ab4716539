#include "zmerge/v2x.hpp"

#include <algorithm>

namespace zmerge {

std::vector<NeighborRecord> visible_neighbors(const World& world, const Vehicle& ego) {
    const auto& net = world.network();
    const auto& cfg = world.config();
    struct Candidate {
        double dist;
        const Vehicle* v;
    };
    std::vector<Candidate> in_range;
    for (const auto& v : world.vehicles()) {
        if (v.id == ego.id) continue;
        const double d = net.metric_distance(ego.pos, ego.lane, v.pos, v.lane);
        if (d <= cfg.v2v_range + 1e-9) in_range.push_back({d, &v});
    }
    std::sort(in_range.begin(), in_range.end(), [](const Candidate& a, const Candidate& b) {
        return a.dist != b.dist ? a.dist < b.dist : a.v->id < b.v->id;
    });
    if (in_range.size() > static_cast<size_t>(cfg.max_neighbors)) {
        in_range.resize(static_cast<size_t>(cfg.max_neighbors));
    }
    std::vector<NeighborRecord> out;
    out.reserve(in_range.size());
    for (const auto& c : in_range) {
        NeighborRecord r;
        r.speed = c.v->speed;
        r.accel = c.v->accel;
        r.lane = static_cast<double>(c.v->lane);
        r.time_to_merge = time_to_point(net.distance_to_merge_point(*c.v), c.v->speed);
        r.distance_to_ego = c.dist;
        out.push_back(r);
    }
    return out;
}

GlobalSummary rsu_broadcast(const World& world) {
    GlobalSummary s;
    s.premerging = world.zone_summary(ZoneId::PreMerging);
    s.merging = world.zone_summary(ZoneId::Merging);
    s.ramp = world.zone_summary(ZoneId::Ramp);
    const auto [qp, qa] = world.queue_lengths();
    s.queue_premerge = qp;
    s.queue_accel = qa;
    s.tick = world.tick();
    return s;
}

}  // namespace zmerge
