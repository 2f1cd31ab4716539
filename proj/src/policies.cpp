#include "zmerge/policies.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace zmerge {

void mask_global_block(Observation& obs) {
    for (int i = 0; i < 8; ++i) obs[static_cast<size_t>(i)] = 0.0;
}

namespace {

// clipped IDM command shared by the rule-based baselines
double idm_command(const World& world, const Vehicle& ego) {
    const auto& cfg = world.config();
    return std::clamp(world.hv_longitudinal_accel(ego), cfg.accel_min, cfg.accel_max_cmd);
}

double min_target_lane_gap(const World& world, const Vehicle& ego, LaneId target) {
    double gap = std::numeric_limits<double>::infinity();
    if (const Vehicle* nl = world.leader_in_lane(ego, target)) {
        gap = std::min(gap, World::bumper_gap(ego, *nl));
    }
    if (const Vehicle* nf = world.follower_in_lane(ego, target)) {
        gap = std::min(gap, World::bumper_gap(*nf, ego));
    }
    return gap;
}

bool ramp_vehicle_near_merge(const World& world, double within_m) {
    for (const auto& v : world.vehicles()) {
        if (v.lane != kRampLane) continue;
        if (world.network().distance_to_merge_point(v) <= within_m) return true;
    }
    return false;
}

class RandomPolicy final : public Policy {
public:
    explicit RandomPolicy(const SimConfig& cfg) : cfg_(cfg) {}
    std::string name() const override { return "random"; }
    HybridAction act(const World&, const Vehicle&, const Observation&, Rng& rng) override {
        const int k = static_cast<int>(rng.uniform_index(kNumActions));
        HybridAction a{k, std::nullopt};
        if (k == kActAccel) a.x = rng.uniform(cfg_.accel_min, cfg_.accel_max_cmd);
        if (k == kActGap) a.x = rng.uniform(kGapMin, kGapMax);
        return a;
    }

private:
    SimConfig cfg_;
};

// lane-change-only strategy: merge when the adjacent gap is wide enough,
// courtesy-shift mainline traffic out of the merge lane, IDM otherwise
class Baseline1Policy final : public Policy {
public:
    std::string name() const override { return "baseline1"; }
    HybridAction act(const World& world, const Vehicle& ego, const Observation&,
                     Rng&) override {
        const auto& net = world.network();
        if (net.on_accel_lane(ego.lane, ego.pos)) {
            if (min_target_lane_gap(world, ego, 1) > 12.0) {
                return HybridAction{kActLaneLeft, std::nullopt};
            }
        } else if (ego.lane == 1 && net.mainline_lanes() >= 2 &&
                   net.zone_of(std::min(ego.pos, net.segment_end()), ego.lane) ==
                       ZoneId::Merging &&
                   ramp_vehicle_near_merge(world, 50.0) &&
                   min_target_lane_gap(world, ego, 2) > 12.0) {
            return HybridAction{kActLaneLeft, std::nullopt};
        }
        return HybridAction{kActAccel, idm_command(world, ego)};
    }
};

// gap-adjustment-only strategy: no lane changes ever; mainline vehicles open
// up room in the merging zone while a ramp vehicle approaches
class Baseline2Policy final : public Policy {
public:
    std::string name() const override { return "baseline2"; }
    HybridAction act(const World& world, const Vehicle& ego, const Observation&,
                     Rng&) override {
        const auto& net = world.network();
        if (ego.lane >= 1 &&
            net.zone_of(std::min(ego.pos, net.segment_end()), ego.lane) == ZoneId::Merging &&
            ramp_vehicle_near_merge(world, 50.0)) {
            return HybridAction{kActGap, kGapMax};
        }
        return HybridAction{kActAccel, idm_command(world, ego)};
    }
};

class PdqnPolicy final : public Policy {
public:
    PdqnPolicy(PdqnAgent agent, bool mask, std::string name)
        : agent_(std::move(agent)), mask_(mask), name_(std::move(name)) {}
    std::string name() const override { return name_; }
    bool masks_global_block() const override { return mask_; }
    HybridAction act(const World&, const Vehicle&, const Observation& obs,
                     Rng& rng) override {
        return agent_.select_action(obs, 0.0, rng);
    }

private:
    PdqnAgent agent_;
    bool mask_;
    std::string name_;
};

}  // namespace

std::unique_ptr<Policy> make_random_policy(const SimConfig& cfg) {
    return std::make_unique<RandomPolicy>(cfg);
}

std::unique_ptr<Policy> make_baseline1_policy() { return std::make_unique<Baseline1Policy>(); }

std::unique_ptr<Policy> make_baseline2_policy() { return std::make_unique<Baseline2Policy>(); }

std::unique_ptr<Policy> make_pdqn_policy(PdqnAgent agent, bool mask_global,
                                         const std::string& name) {
    return std::make_unique<PdqnPolicy>(std::move(agent), mask_global, name);
}

std::unique_ptr<Policy> make_policy(const std::string& kind, const SimConfig& cfg,
                                    const std::string& checkpoint_path) {
    if (kind == "random") return make_random_policy(cfg);
    if (kind == "baseline1") return make_baseline1_policy();
    if (kind == "baseline2") return make_baseline2_policy();
    if (kind == "zmerge" || kind == "baseline3") {
        if (checkpoint_path.empty()) {
            throw std::runtime_error("policy '" + kind + "' requires a checkpoint");
        }
        return make_pdqn_policy(PdqnAgent::load_file(checkpoint_path),
                                kind == "baseline3", kind);
    }
    throw std::runtime_error("unknown policy: " + kind);
}

}  // namespace zmerge
