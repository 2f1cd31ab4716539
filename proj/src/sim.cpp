#include "zmerge/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace zmerge {

const char* event_name(SimEventType t) {
    switch (t) {
        case SimEventType::Collision: return "collision";
        case SimEventType::Exit: return "exit";
        case SimEventType::Spawn: return "spawn";
        case SimEventType::Deadlock: return "deadlock";
        case SimEventType::LaneChange: return "lane_change";
    }
    return "?";
}

IdmParams idm_params(const SimConfig& cfg) {
    return IdmParams{cfg.v_max, cfg.tau, cfg.idm_a, cfg.idm_b, cfg.idm_s0,
                     cfg.idm_exponent};
}

double idm_free_accel(const IdmParams& p, double v) {
    return p.a * (1.0 - std::pow(v / p.v0, p.exponent));
}

double idm_accel(const IdmParams& p, double v, double gap, double leader_speed) {
    if (gap <= 0.0) return -std::numeric_limits<double>::infinity();
    const double dv = v - leader_speed;
    const double s_star =
        p.s0 + std::max(0.0, v * p.T + v * dv / (2.0 * std::sqrt(p.a * p.b)));
    return p.a * (1.0 - std::pow(v / p.v0, p.exponent) - (s_star / gap) * (s_star / gap));
}

World::World(const SimConfig& cfg, std::uint64_t seed)
    : cfg_(cfg), net_(RoadNetwork::build(cfg)), idm_(idm_params(cfg)), rng_(seed) {
    pending_spawns_.assign(static_cast<size_t>(cfg_.mainline_lanes) + 1, 0.0);
}

void World::reset() {
    vehicles_.clear();
    removed_.clear();
    std::fill(pending_spawns_.begin(), pending_spawns_.end(), 0.0);
    tick_ = 0;
    counters_ = WorldCounters{};
}

Vehicle* World::find(VehicleId id) {
    for (auto& v : vehicles_) {
        if (v.id == id) return &v;
    }
    return nullptr;
}

const Vehicle* World::find(VehicleId id) const {
    return const_cast<World*>(this)->find(id);
}

const Vehicle* World::leader_in_lane(const Vehicle& v, LaneId lane) const {
    const Vehicle* best = nullptr;
    for (const auto& o : vehicles_) {
        if (o.id == v.id || o.lane != lane) continue;
        if (o.pos <= v.pos) continue;
        if (!best || o.pos < best->pos || (o.pos == best->pos && o.id < best->id)) {
            best = &o;
        }
    }
    return best;
}

const Vehicle* World::follower_in_lane(const Vehicle& v, LaneId lane) const {
    const Vehicle* best = nullptr;
    for (const auto& o : vehicles_) {
        if (o.id == v.id || o.lane != lane) continue;
        if (o.pos > v.pos) continue;
        if (!best || o.pos > best->pos || (o.pos == best->pos && o.id < best->id)) {
            best = &o;
        }
    }
    return best;
}

double World::hv_longitudinal_accel(const Vehicle& v) const {
    IdmParams p = idm_;
    if (net_.on_ramp_feeder(v.lane, v.pos)) {
        p.v0 = std::min(p.v0, cfg_.ramp_speed_limit);
    }
    const Vehicle* leader = leader_of(v);
    double gap = std::numeric_limits<double>::infinity();
    double lead_speed = 0.0;
    if (leader) {
        gap = bumper_gap(v, *leader);
        lead_speed = leader->speed;
    }
    // the acceleration lane ends at the merge point; treat it as a wall
    if (v.lane == kRampLane) {
        const double wall_gap = net_.merge_point() - v.pos;
        if (wall_gap < gap) {
            gap = wall_gap;
            lead_speed = 0.0;
        }
    }
    const double a = std::isfinite(gap) ? idm_accel(p, v.speed, gap, lead_speed)
                                        : idm_free_accel(p, v.speed);
    return std::clamp(a, cfg_.accel_min, cfg_.accel_max_phys);
}

namespace {

double clipped_idm(const IdmParams& p, const Vehicle& follower,
                   const Vehicle* leader, double a_min, double a_max) {
    double a = leader ? idm_accel(p, follower.speed, World::bumper_gap(follower, *leader),
                                  leader->speed)
                      : idm_free_accel(p, follower.speed);
    return std::clamp(a, a_min, a_max);
}

}  // namespace

std::optional<LaneId> World::hv_lane_change(const Vehicle& v) const {
    const long cooldown_ticks = static_cast<long>(cfg_.lane_change_cooldown_s / cfg_.dt);
    if (tick_ - v.last_lane_change_tick < cooldown_ticks) return std::nullopt;

    const double a_min = cfg_.accel_min;
    const double a_max = cfg_.accel_max_phys;

    // mandatory merge off the acceleration lane: safety criterion only
    if (net_.on_accel_lane(v.lane, v.pos)) {
        const LaneId target = 1;
        const Vehicle* new_leader = leader_in_lane(v, target);
        const Vehicle* new_follower = follower_in_lane(v, target);
        if (new_leader && bumper_gap(v, *new_leader) <= 0.5) return std::nullopt;
        if (new_follower && bumper_gap(*new_follower, v) <= 0.5) return std::nullopt;
        if (new_follower) {
            const double a_f = idm_accel(idm_, new_follower->speed,
                                         bumper_gap(*new_follower, v), v.speed);
            if (a_f < -cfg_.mobil_b_safe) return std::nullopt;
        }
        const double a_self = new_leader ? idm_accel(idm_, v.speed, bumper_gap(v, *new_leader),
                                                     new_leader->speed)
                                         : idm_free_accel(idm_, v.speed);
        if (a_self < -cfg_.mobil_b_safe) return std::nullopt;
        return target;
    }
    if (v.lane == kRampLane) return std::nullopt;  // feeder: nowhere to go

    // discretionary MOBIL over mainline candidates
    const Vehicle* old_leader = leader_of(v);
    const Vehicle* old_follower = follower_of(v);
    const double a_ego_old = clipped_idm(idm_, v, old_leader, a_min, a_max);
    double a_old_follower_before = 0.0, a_old_follower_after = 0.0;
    if (old_follower) {
        a_old_follower_before = clipped_idm(idm_, *old_follower, &v, a_min, a_max);
        a_old_follower_after = clipped_idm(idm_, *old_follower, old_leader, a_min, a_max);
    }

    std::optional<LaneId> best;
    double best_incentive = cfg_.mobil_a_thresh;
    for (const LaneId target : {v.lane + 1, v.lane - 1}) {
        if (target < 1 || target > net_.mainline_lanes()) continue;
        const Vehicle* new_leader = leader_in_lane(v, target);
        const Vehicle* new_follower = follower_in_lane(v, target);
        if (new_leader && bumper_gap(v, *new_leader) <= 0.0) continue;
        if (new_follower && bumper_gap(*new_follower, v) <= 0.0) continue;

        const double a_ego_new = clipped_idm(idm_, v, new_leader, a_min, a_max);
        if (a_ego_new < -cfg_.mobil_b_safe) continue;
        double a_new_follower_before = 0.0, a_new_follower_after = 0.0;
        if (new_follower) {
            a_new_follower_before =
                clipped_idm(idm_, *new_follower, new_leader, a_min, a_max);
            a_new_follower_after = clipped_idm(idm_, *new_follower, &v, a_min, a_max);
            if (a_new_follower_after < -cfg_.mobil_b_safe) continue;
        }
        const double incentive =
            a_ego_new - a_ego_old +
            cfg_.mobil_politeness * ((a_new_follower_after - a_new_follower_before) +
                                     (a_old_follower_after - a_old_follower_before));
        if (incentive > best_incentive) {
            best_incentive = incentive;
            best = target;
        }
    }
    return best;
}

double World::gap_controller_accel(const Vehicle& v) const {
    const Vehicle* leader = leader_of(v);
    double gap = std::numeric_limits<double>::infinity();
    double lead_speed = 0.0;
    if (leader) {
        gap = bumper_gap(v, *leader);
        lead_speed = leader->speed;
    }
    if (v.lane == kRampLane) {
        const double wall_gap = net_.merge_point() - v.pos;
        if (wall_gap < gap) {
            gap = wall_gap;
            lead_speed = 0.0;
        }
    }
    double target_v = cfg_.v_max;
    if (net_.on_ramp_feeder(v.lane, v.pos)) {
        target_v = std::min(target_v, cfg_.ramp_speed_limit);
    }
    double a;
    if (!std::isfinite(gap)) {
        a = cfg_.gap_kv * (target_v - v.speed);  // cruise toward the limit
    } else {
        a = cfg_.gap_kp * (gap - v.desired_gap) + cfg_.gap_kv * (lead_speed - v.speed);
        a = std::min(a, cfg_.gap_kv * (target_v - v.speed));
    }
    return std::clamp(a, cfg_.accel_min, cfg_.accel_max_cmd);
}

double World::av_longitudinal_accel(Vehicle& v) const {
    if (v.has_commanded_accel) {
        return std::clamp(v.commanded_accel, cfg_.accel_min, cfg_.accel_max_cmd);
    }
    return gap_controller_accel(v);
}

void World::execute_lane_changes(std::vector<SimEvent>& events) {
    // decide everything from the tick-start state, then apply in id order
    struct Change {
        VehicleId id;
        LaneId target;
    };
    std::vector<Change> changes;
    for (const auto& v : vehicles_) {
        if (v.role == Role::HV) {
            if (auto target = hv_lane_change(v)) changes.push_back({v.id, *target});
        } else if (v.lane_change_intent != 0) {
            changes.push_back({v.id, v.lane + v.lane_change_intent});
        }
    }
    for (const auto& c : changes) {
        Vehicle* v = find(c.id);
        if (!v) continue;
        double min_gap = std::numeric_limits<double>::infinity();
        if (const Vehicle* nl = leader_in_lane(*v, c.target)) {
            min_gap = std::min(min_gap, bumper_gap(*v, *nl));
        }
        if (const Vehicle* nf = follower_in_lane(*v, c.target)) {
            min_gap = std::min(min_gap, bumper_gap(*nf, *v));
        }
        v->lane = c.target;
        v->changed_lane_this_tick = true;
        v->lane_change_gap = min_gap;
        v->last_lane_change_tick = tick_;
        if (v->route == Route::Ramp && c.target >= 1) v->merged = true;
        events.push_back({SimEventType::LaneChange, tick_, v->id, 0});
    }
}

void World::integrate() {
    // accelerations from the post-lane-change state, then one Euler step
    std::vector<double> accel(vehicles_.size());
    for (size_t i = 0; i < vehicles_.size(); ++i) {
        Vehicle& v = vehicles_[i];
        double a = v.role == Role::HV ? hv_longitudinal_accel(v) : av_longitudinal_accel(v);
        accel[i] = std::clamp(a, cfg_.accel_min, cfg_.accel_max_phys);
    }
    for (size_t i = 0; i < vehicles_.size(); ++i) {
        Vehicle& v = vehicles_[i];
        const double a = accel[i];
        const double disp = std::max(0.0, v.speed * cfg_.dt + 0.5 * a * cfg_.dt * cfg_.dt);
        v.pos += disp;
        v.speed = std::clamp(v.speed + a * cfg_.dt, 0.0, cfg_.v_max);
        if (net_.on_ramp_feeder(v.lane, v.pos)) {
            v.speed = std::min(v.speed, cfg_.ramp_speed_limit);
        }
        v.accel = a;
        if (v.lane == kRampLane && v.pos > net_.merge_point()) {
            v.pos = net_.merge_point();
            v.speed = 0.0;
        }
        v.has_commanded_accel = false;
        v.lane_change_intent = 0;
    }
}

std::vector<std::pair<VehicleId, VehicleId>> World::detect_collisions() const {
    std::vector<std::pair<VehicleId, VehicleId>> out;
    std::vector<const Vehicle*> lane_veh;
    for (LaneId lane = kRampLane; lane <= net_.mainline_lanes(); ++lane) {
        lane_veh.clear();
        for (const auto& v : vehicles_) {
            if (v.lane == lane) lane_veh.push_back(&v);
        }
        std::sort(lane_veh.begin(), lane_veh.end(), [](const Vehicle* a, const Vehicle* b) {
            return a->pos != b->pos ? a->pos < b->pos : a->id < b->id;
        });
        for (size_t i = 0; i + 1 < lane_veh.size(); ++i) {
            const Vehicle* follower = lane_veh[i];
            const Vehicle* leader = lane_veh[i + 1];
            if (bumper_gap(*follower, *leader) < 0.0) {
                out.emplace_back(follower->id, leader->id);
            }
        }
    }
    return out;
}

void World::handle_collisions(std::vector<SimEvent>& events) {
    const auto pairs = detect_collisions();
    std::vector<VehicleId> dead;
    for (const auto& [a, b] : pairs) {
        events.push_back({SimEventType::Collision, tick_, a, b});
        dead.push_back(a);
        dead.push_back(b);
    }
    std::sort(dead.begin(), dead.end());
    dead.erase(std::unique(dead.begin(), dead.end()), dead.end());
    counters_.collision_removed += static_cast<long>(dead.size());
    remove_ids(dead);
}

void World::handle_exits_and_deadlocks(std::vector<SimEvent>& events) {
    std::vector<VehicleId> dead;
    for (auto& v : vehicles_) {
        if (v.pos > net_.segment_end()) {
            events.push_back({SimEventType::Exit, tick_, v.id, 0});
            dead.push_back(v.id);
            ++counters_.exited;
            continue;
        }
        if (v.lane == kRampLane && v.pos >= net_.merge_point() - cfg_.deadlock_margin &&
            v.speed < cfg_.deadlock_speed) {
            v.stalled_at_end_s += cfg_.dt;
            if (v.stalled_at_end_s > cfg_.deadlock_time_s) {
                events.push_back({SimEventType::Deadlock, tick_, v.id, 0});
                dead.push_back(v.id);
                ++counters_.deadlock_removed;
            }
        } else {
            v.stalled_at_end_s = 0.0;
        }
    }
    remove_ids(dead);
}

void World::remove_ids(const std::vector<VehicleId>& ids) {
    if (ids.empty()) return;
    vehicles_.erase(std::remove_if(vehicles_.begin(), vehicles_.end(),
                                   [&](const Vehicle& v) {
                                       if (std::find(ids.begin(), ids.end(), v.id) ==
                                           ids.end()) {
                                           return false;
                                       }
                                       removed_.push_back(v);
                                       return true;
                                   }),
                    vehicles_.end());
}

const Vehicle* World::find_post_step(VehicleId id) const {
    if (const Vehicle* v = find(id)) return v;
    for (const auto& v : removed_) {
        if (v.id == id) return &v;
    }
    return nullptr;
}

bool World::entry_blocked(LaneId lane, double entry_pos) const {
    for (const auto& v : vehicles_) {
        if (v.lane != lane) continue;
        const double rear = v.pos - v.length;
        if (rear < entry_pos + cfg_.spawn_headway_min && v.pos >= entry_pos - 1e-9) {
            return true;
        }
    }
    return false;
}

Vehicle World::make_vehicle(LaneId lane, Route route, double entry_speed, double entry_pos) {
    Vehicle v;
    v.id = next_id_++;
    v.role = rng_.bernoulli(cfg_.penetration_rate) ? Role::AV : Role::HV;
    v.route = route;
    v.lane = lane;
    v.pos = entry_pos;
    v.length = cfg_.vehicle_len;
    v.desired_gap = cfg_.default_desired_gap;
    v.spawn_tick = tick_;
    // cap the entry speed so injection cannot manufacture rear-end collisions
    double speed = entry_speed;
    Vehicle probe = v;
    if (const Vehicle* leader = leader_in_lane(probe, lane)) {
        const double gap = bumper_gap(probe, *leader);
        const double safe =
            leader->speed + std::sqrt(2.0 * cfg_.idm_b * std::max(0.0, gap - cfg_.idm_s0));
        speed = std::min(speed, safe);
    }
    v.speed = std::clamp(speed, 0.0, cfg_.v_max);
    return v;
}

VehicleId World::add_vehicle(Vehicle v) {
    v.id = next_id_++;
    v.spawn_tick = tick_;
    ++counters_.spawned;
    if (v.role == Role::AV) {
        ++counters_.spawned_avs;
        if (v.route == Route::Ramp) ++counters_.spawned_ramp_avs;
    }
    vehicles_.push_back(v);
    return v.id;
}

std::vector<SimEvent> World::spawn_arrivals() {
    std::vector<SimEvent> events;
    const double per_lane_rate = cfg_.mainline_flow_vph / 3600.0;  // veh/s
    const double ramp_rate = cfg_.ramp_flow_vph / 3600.0;
    for (int lane = 1; lane <= cfg_.mainline_lanes; ++lane) {
        pending_spawns_[static_cast<size_t>(lane) - 1] +=
            per_lane_rate > 0.0 ? rng_.poisson(per_lane_rate * cfg_.dt) : 0;
    }
    pending_spawns_.back() += ramp_rate > 0.0 ? rng_.poisson(ramp_rate * cfg_.dt) : 0;

    for (int lane = 1; lane <= cfg_.mainline_lanes; ++lane) {
        auto& pending = pending_spawns_[static_cast<size_t>(lane) - 1];
        if (pending >= 1.0 && !entry_blocked(lane, 0.0)) {
            pending -= 1.0;
            Vehicle v = make_vehicle(lane, Route::Mainline, cfg_.mainline_entry_speed, 0.0);
            vehicles_.push_back(v);
            ++counters_.spawned;
            if (v.role == Role::AV) ++counters_.spawned_avs;
            events.push_back({SimEventType::Spawn, tick_, v.id, 0});
        }
    }
    auto& ramp_pending = pending_spawns_.back();
    if (ramp_pending >= 1.0 && !entry_blocked(kRampLane, net_.ramp_start())) {
        ramp_pending -= 1.0;
        Vehicle v = make_vehicle(kRampLane, Route::Ramp, cfg_.ramp_entry_speed,
                                 net_.ramp_start());
        vehicles_.push_back(v);
        ++counters_.spawned;
        if (v.role == Role::AV) {
            ++counters_.spawned_avs;
            ++counters_.spawned_ramp_avs;
        }
        events.push_back({SimEventType::Spawn, tick_, v.id, 0});
    }
    return events;
}

std::vector<SimEvent> World::step() {
    std::vector<SimEvent> events;
    removed_.clear();
    for (auto& v : vehicles_) {
        v.changed_lane_this_tick = false;
        v.lane_change_gap = 0.0;
    }
    execute_lane_changes(events);
    integrate();
    handle_collisions(events);
    handle_exits_and_deadlocks(events);
    const auto spawns = spawn_arrivals();
    events.insert(events.end(), spawns.begin(), spawns.end());
    ++tick_;
    return events;
}

std::pair<int, int> World::queue_lengths() const {
    auto longest_run = [&](LaneId lane, double lo, double hi, bool inclusive_hi) {
        std::vector<const Vehicle*> in_span;
        for (const auto& v : vehicles_) {
            if (v.lane != lane) continue;
            if (v.pos < lo) continue;
            if (inclusive_hi ? v.pos > hi : v.pos >= hi) continue;
            in_span.push_back(&v);
        }
        std::sort(in_span.begin(), in_span.end(),
                  [](const Vehicle* a, const Vehicle* b) { return a->pos > b->pos; });
        int best = 0, run = 0;
        const Vehicle* prev = nullptr;
        for (const Vehicle* v : in_span) {
            const bool slow = v->speed < cfg_.queue_speed_thresh;
            const bool adjacent = prev && (prev->pos - v->pos) < cfg_.queue_headway;
            if (slow) {
                run = (run > 0 && adjacent) ? run + 1 : 1;
            } else {
                run = 0;
            }
            best = std::max(best, run);
            prev = v;
        }
        return best;
    };

    int q_p = 0;
    for (int lane = 1; lane <= net_.mainline_lanes(); ++lane) {
        q_p = std::max(q_p, longest_run(lane, net_.premerge_start(),
                                        net_.merge_zone_start(), false));
    }
    const int q_a =
        longest_run(kRampLane, net_.merge_zone_start(), net_.merge_point(), true);
    return {q_p, q_a};
}

ZoneStats World::zone_summary(ZoneId z) const {
    const auto in_zone = [&](const Vehicle& v) {
        const bool on_main = v.lane >= 1;
        switch (z) {
            case ZoneId::Warmup:
                return on_main && v.pos < net_.premerge_start();
            case ZoneId::PreMerging:
                return on_main && v.pos >= net_.premerge_start() &&
                       v.pos < net_.merge_zone_start();
            case ZoneId::Merging:
                // acceleration-lane vehicles held at the wall count (<=)
                if (on_main) {
                    return v.pos >= net_.merge_zone_start() && v.pos < net_.merge_point();
                }
                return v.pos >= net_.merge_zone_start() && v.pos <= net_.merge_point();
            case ZoneId::Ramp:
                return !on_main && v.pos < net_.merge_zone_start();
        }
        return false;
    };
    int count = 0;
    double speed_sum = 0.0;
    for (const auto& v : vehicles_) {
        if (!in_zone(v)) continue;
        ++count;
        speed_sum += v.speed;
    }
    ZoneStats out;
    if (count > 0) {
        out.avg_speed = speed_sum / count;
    } else {
        out.avg_speed = cfg_.empty_zone_speed_is_vmax ? cfg_.v_max : 0.0;
    }
    const double len_km = net_.zone_length(z) / 1000.0;
    out.density = count / (len_km * net_.lanes_in_zone(z));
    return out;
}

}  // namespace zmerge
