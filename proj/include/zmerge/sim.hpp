#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "zmerge/config.hpp"
#include "zmerge/rng.hpp"
#include "zmerge/road.hpp"
#include "zmerge/vehicle.hpp"

namespace zmerge {

struct ZoneStats {
    double avg_speed = 0.0;  // m/s, 0 for an empty zone unless configured otherwise
    double density = 0.0;    // veh/km/lane
};

struct IdmParams {
    double v0, T, a, b, s0, exponent;
};

IdmParams idm_params(const SimConfig& cfg);

// Intelligent Driver Model acceleration, unclipped. `gap` is bumper-to-bumper.
double idm_accel(const IdmParams& p, double v, double gap, double leader_speed);
double idm_free_accel(const IdmParams& p, double v);

// Conservation counters, cumulative within an episode.
struct WorldCounters {
    long spawned = 0;
    long spawned_avs = 0;
    long spawned_ramp_avs = 0;
    long exited = 0;
    long collision_removed = 0;
    long deadlock_removed = 0;
};

// Discrete-time traffic world. Single writer; step() advances one tick.
class World {
public:
    World(const SimConfig& cfg, std::uint64_t seed);

    const SimConfig& config() const { return cfg_; }
    const RoadNetwork& network() const { return net_; }
    long tick() const { return tick_; }
    double now_s() const { return static_cast<double>(tick_) * cfg_.dt; }

    const std::vector<Vehicle>& vehicles() const { return vehicles_; }
    Vehicle* find(VehicleId id);
    const Vehicle* find(VehicleId id) const;

    const Vehicle* leader_of(const Vehicle& v) const { return leader_in_lane(v, v.lane); }
    const Vehicle* follower_of(const Vehicle& v) const { return follower_in_lane(v, v.lane); }
    const Vehicle* leader_in_lane(const Vehicle& v, LaneId lane) const;
    const Vehicle* follower_in_lane(const Vehicle& v, LaneId lane) const;

    static double bumper_gap(const Vehicle& follower, const Vehicle& leader) {
        return leader.pos - leader.length - follower.pos;
    }

    // HV longitudinal model, wall-aware on the acceleration lane, unclipped
    double hv_longitudinal_accel(const Vehicle& v) const;
    // MOBIL discretionary change plus the mandatory merge off the acceleration lane
    std::optional<LaneId> hv_lane_change(const Vehicle& v) const;

    // gap-following controller used by AVs between explicit accel commands
    double gap_controller_accel(const Vehicle& v) const;

    std::vector<SimEvent> step();

    // arrival process only; exposed separately so its statistics can be
    // measured in isolation
    std::vector<SimEvent> spawn_arrivals();

    // direct insertion for scenario construction; assigns the id and keeps
    // the conservation counters consistent
    VehicleId add_vehicle(Vehicle v);

    std::vector<std::pair<VehicleId, VehicleId>> detect_collisions() const;
    std::pair<int, int> queue_lengths() const;  // (Q_p, Q_a)
    ZoneStats zone_summary(ZoneId z) const;

    // vehicles removed during the last step(), in their final state; needed
    // for end-of-life observation and reward evaluation
    const std::vector<Vehicle>& removed_last_step() const { return removed_; }
    // live vehicle, or its final snapshot if it was removed this tick
    const Vehicle* find_post_step(VehicleId id) const;

    const WorldCounters& counters() const { return counters_; }

    // clears traffic for a new episode; the RNG stream continues
    void reset();

    // removes all vehicles but keeps tick, RNG, pending arrivals, and
    // counters; lets arrival statistics be measured with entries always clear
    void clear_traffic() { vehicles_.clear(); }

private:
    double av_longitudinal_accel(Vehicle& v) const;
    void execute_lane_changes(std::vector<SimEvent>& events);
    void integrate();
    void handle_collisions(std::vector<SimEvent>& events);
    void handle_exits_and_deadlocks(std::vector<SimEvent>& events);
    Vehicle make_vehicle(LaneId lane, Route route, double entry_speed, double entry_pos);
    bool entry_blocked(LaneId lane, double entry_pos) const;
    void remove_ids(const std::vector<VehicleId>& ids);

    SimConfig cfg_;
    RoadNetwork net_;
    IdmParams idm_;
    Rng rng_;
    long tick_ = 0;
    VehicleId next_id_ = 1;
    std::vector<Vehicle> vehicles_;
    std::vector<Vehicle> removed_;
    std::vector<double> pending_spawns_;  // per mainline lane, last slot = ramp
    WorldCounters counters_;
};

}  // namespace zmerge
