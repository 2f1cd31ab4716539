#include "zmerge/env.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "zmerge/geo.hpp"

namespace zmerge {

const char* status_name(AgentStatus s) {
    switch (s) {
        case AgentStatus::Active: return "active";
        case AgentStatus::Exited: return "exited";
        case AgentStatus::Collided: return "collided";
        case AgentStatus::Deadlocked: return "deadlocked";
        case AgentStatus::MergedOk: return "merged_ok";
    }
    return "?";
}

namespace {

double clamp1(double x) { return std::clamp(x, -1.0, 1.0); }

}  // namespace

Observation build_observation(const World& world, const GlobalSummary& summary,
                              VehicleId agent_id) {
    const Vehicle* ego = world.find(agent_id);
    if (!ego) throw std::invalid_argument("build_observation: unknown or terminated agent");
    const auto& cfg = world.config();
    const auto& net = world.network();
    const double max_lane = static_cast<double>(net.mainline_lanes());

    Observation obs;
    int i = 0;
    // global block from the RSU broadcast
    for (const ZoneStats* z : {&summary.premerging, &summary.merging, &summary.ramp}) {
        obs[i++] = clamp1(z->avg_speed / cfg.v_max);
        obs[i++] = clamp1(z->density / kNormDensity);
    }
    obs[i++] = clamp1(summary.queue_premerge / kNormCount);
    obs[i++] = clamp1(summary.queue_accel / kNormCount);
    // ego block
    obs[i++] = clamp1(ego->speed / cfg.v_max);
    obs[i++] = clamp1(ego->accel / kNormAccel);
    obs[i++] = clamp1(static_cast<double>(ego->lane) / max_lane);
    obs[i++] = clamp1(time_to_point(net.distance_to_merge_point(*ego), ego->speed) / kNormTime);
    // neighbor block, nearest first, padded with the sentinel
    const auto neighbors = visible_neighbors(world, *ego);
    for (int n = 0; n < cfg.max_neighbors; ++n) {
        if (n < static_cast<int>(neighbors.size())) {
            const auto& r = neighbors[static_cast<size_t>(n)];
            obs[i++] = clamp1(r.speed / cfg.v_max);
            obs[i++] = clamp1(r.accel / kNormAccel);
            obs[i++] = clamp1(r.lane / max_lane);
            obs[i++] = clamp1(r.time_to_merge / kNormTime);
            obs[i++] = clamp1(r.distance_to_ego / cfg.v2v_range);
        } else {
            for (int f = 0; f < 5; ++f) obs[i++] = kObsPad;
        }
    }
    return obs;
}

bool action_valid(const World& world, const Vehicle& v, const HybridAction& a) {
    const auto& cfg = world.config();
    const auto& net = world.network();
    switch (a.k) {
        case kActMaintain:
            return !a.x.has_value();
        case kActAccel:
            return a.x && *a.x >= cfg.accel_min && *a.x <= cfg.accel_max_cmd;
        case kActGap:
            return a.x && *a.x >= kGapMin && *a.x <= kGapMax;
        case kActLaneLeft:
        case kActLaneRight: {
            if (a.x.has_value()) return false;
            if (net.on_ramp_feeder(v.lane, v.pos)) return false;
            const LaneId target = v.lane + (a.k == kActLaneLeft ? 1 : -1);
            if (target < 1 || target > net.mainline_lanes()) return false;
            if (!net.lane_exists(target, v.pos)) return false;
            // physical occupancy: the target slot must have room
            if (const Vehicle* nl = world.leader_in_lane(v, target)) {
                if (World::bumper_gap(v, *nl) < cfg.min_lane_change_gap) return false;
            }
            if (const Vehicle* nf = world.follower_in_lane(v, target)) {
                if (World::bumper_gap(*nf, v) < cfg.min_lane_change_gap) return false;
            }
            return true;
        }
        default:
            return false;
    }
}

HybridAction validate_action(const World& world, VehicleId agent_id, const HybridAction& a) {
    const HybridAction fallback{kActMaintain, std::nullopt};
    const Vehicle* v = world.find(agent_id);
    if (!v) return fallback;
    return action_valid(world, *v, a) ? a : fallback;
}

void apply_action(World& world, VehicleId agent_id, const HybridAction& a) {
    Vehicle* v = world.find(agent_id);
    if (!v) return;
    switch (a.k) {
        case kActLaneLeft: v->lane_change_intent = 1; break;
        case kActLaneRight: v->lane_change_intent = -1; break;
        case kActAccel:
            v->has_commanded_accel = true;
            v->commanded_accel = *a.x;
            break;
        case kActGap: v->desired_gap = *a.x; break;
        case kActMaintain: break;
        default: break;
    }
}

// --- rewards ----------------------------------------------------------------

double reward_efficiency_raw(double mean_speed, double ego_speed, double v_max) {
    const double e_g = -std::abs(mean_speed - v_max) / v_max;
    const double e_l = -std::abs(ego_speed - v_max) / v_max;
    return e_g + e_l;
}

double reward_safety_raw(const SafetyInputs& in, double ttc_threshold, double delta) {
    if (in.collided) return -1.0;
    if (in.ttc <= ttc_threshold) return -std::exp(-in.ttc);
    if (in.lane_changed && in.lateral_gap <= delta) {
        return -delta / std::max(in.lateral_gap, 0.1);
    }
    return 0.0;
}

double reward_queue_raw(int queue_premerge, int queue_accel) {
    return -std::log10(1.0 + queue_premerge + queue_accel);
}

double reward_comfort_raw(double accel, double alpha_max) {
    const double mag = std::abs(accel);
    if (mag <= alpha_max) return 0.0;
    return -(mag - alpha_max) / mag;
}

double reward_deadlock_raw(double pos_on_lane, double lane_len) {
    const double d = pos_on_lane - lane_len;
    return -std::exp(-(d * d) / (10.0 * lane_len));
}

double reward_lane_change_raw(bool changed_lane) { return changed_lane ? -1.0 : 0.0; }

double reward_efficiency(const World& world, const Vehicle& agent) {
    double sum = 0.0;
    int count = 0;
    bool agent_live = false;
    for (const auto& v : world.vehicles()) {
        sum += v.speed;
        ++count;
        if (v.id == agent.id) agent_live = true;
    }
    if (!agent_live) {
        sum += agent.speed;
        ++count;
    }
    const double mean = sum / count;
    return reward_efficiency_raw(mean, agent.speed, world.config().v_max);
}

double reward_safety(const World& world, const Vehicle& agent, bool collided) {
    SafetyInputs in;
    in.collided = collided;
    in.ttc = std::numeric_limits<double>::infinity();
    const Vehicle* live = world.find(agent.id);
    if (live) {
        if (const Vehicle* leader = world.leader_of(*live)) {
            const double t = time_to_collision(KinematicPair{
                leader->pos, leader->length, leader->speed, live->pos, live->speed});
            in.ttc = t == kCollisionGap ? 0.0 : t;
        }
    }
    in.lane_changed = agent.changed_lane_this_tick;
    in.lateral_gap = agent.lane_change_gap;
    return reward_safety_raw(in, world.config().ttc_threshold, world.config().lateral_safety);
}

double reward_queue(const World& world) {
    const auto [qp, qa] = world.queue_lengths();
    return reward_queue_raw(qp, qa);
}

double reward_comfort(const World& world, const Vehicle& agent) {
    return reward_comfort_raw(agent.accel, world.config().comfort_accel);
}

double reward_deadlock(const World& world, const Vehicle& agent) {
    const auto& net = world.network();
    if (!net.on_accel_lane(agent.lane, agent.pos)) return 0.0;
    return reward_deadlock_raw(agent.pos - net.merge_zone_start(), net.merge_len());
}

double reward_lane_change(const Vehicle& agent) {
    return reward_lane_change_raw(agent.changed_lane_this_tick);
}

RewardBreakdown combine_rewards(const std::array<double, 6>& raw,
                                const std::array<double, 6>& weights) {
    RewardBreakdown out;
    out.raw = raw;
    for (int i = 0; i < 6; ++i) {
        out.squashed[static_cast<size_t>(i)] = std::tanh(raw[static_cast<size_t>(i)]);
        out.total += weights[static_cast<size_t>(i)] * out.squashed[static_cast<size_t>(i)];
    }
    return out;
}

RewardBreakdown compute_rewards(const World& world, const Vehicle& agent, bool collided) {
    const auto& cfg = world.config();
    const std::array<double, 6> raw = {
        reward_efficiency(world, agent), reward_safety(world, agent, collided),
        reward_comfort(world, agent),    reward_queue(world),
        reward_deadlock(world, agent),   reward_lane_change(agent)};
    return combine_rewards(raw, {cfg.w_e, cfg.w_s, cfg.w_c, cfg.w_q, cfg.w_d, cfg.w_l});
}

AgentStatus agent_status(const World& world, VehicleId agent_id,
                         const std::vector<SimEvent>& tick_events) {
    for (const auto& e : tick_events) {
        if (e.type == SimEventType::Collision && (e.a == agent_id || e.b == agent_id)) {
            return AgentStatus::Collided;
        }
    }
    for (const auto& e : tick_events) {
        if (e.type == SimEventType::Deadlock && e.a == agent_id) {
            return AgentStatus::Deadlocked;
        }
    }
    for (const auto& e : tick_events) {
        if (e.type == SimEventType::Exit && e.a == agent_id) return AgentStatus::Exited;
    }
    const Vehicle* v = world.find_post_step(agent_id);
    if (v && v->route == Route::Ramp && v->merged) return AgentStatus::MergedOk;
    return AgentStatus::Active;
}

}  // namespace zmerge
