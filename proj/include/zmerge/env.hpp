#pragma once

#include <array>
#include <optional>

#include "zmerge/sim.hpp"
#include "zmerge/v2x.hpp"

namespace zmerge {

inline constexpr int kObsDim = 42;
inline constexpr int kNumActions = 5;
inline constexpr double kObsPad = -1.0;

// discrete action indices
inline constexpr int kActLaneLeft = 0;
inline constexpr int kActLaneRight = 1;
inline constexpr int kActAccel = 2;
inline constexpr int kActGap = 3;
inline constexpr int kActMaintain = 4;

inline constexpr double kGapMin = 5.0;
inline constexpr double kGapMax = 20.0;

// fixed feature scales; raw values divide by these and clamp to [-1, 1]
inline constexpr double kNormDensity = 100.0;  // veh/km/lane
inline constexpr double kNormCount = 20.0;     // queue vehicles
inline constexpr double kNormTime = 30.0;      // s
inline constexpr double kNormAccel = 4.5;      // m/s^2

using Observation = std::array<double, kObsDim>;

// Discrete index plus the continuous argument for the parameterized actions
// (accel for k=2, desired gap for k=3; absent otherwise).
struct HybridAction {
    int k = kActMaintain;
    std::optional<double> x;
};

inline bool operator==(const HybridAction& a, const HybridAction& b) {
    return a.k == b.k && a.x == b.x;
}

enum class AgentStatus { Active, Exited, Collided, Deadlocked, MergedOk };

const char* status_name(AgentStatus s);
// MergedOk marks a completed merge but the agent keeps driving; only removal
// from the road ends its decision process
inline bool is_terminal(AgentStatus s) {
    return s == AgentStatus::Exited || s == AgentStatus::Collided ||
           s == AgentStatus::Deadlocked;
}

struct RewardBreakdown {
    std::array<double, 6> raw{};       // e, s, c, q, d, l
    std::array<double, 6> squashed{};  // tanh of each
    double total = 0.0;
};

// --- observation -----------------------------------------------------------

Observation build_observation(const World& world, const GlobalSummary& summary,
                              VehicleId agent_id);

// --- action profiler -------------------------------------------------------

bool action_valid(const World& world, const Vehicle& v, const HybridAction& a);
// returns `a` when valid, otherwise the maintain fallback; total by construction
HybridAction validate_action(const World& world, VehicleId agent_id, const HybridAction& a);
void apply_action(World& world, VehicleId agent_id, const HybridAction& a);

// --- reward components -----------------------------------------------------
// raw_ functions are the bare piecewise formulas; the world-level overloads
// extract their inputs from the simulation state.

double reward_efficiency_raw(double mean_speed, double ego_speed, double v_max);
struct SafetyInputs {
    bool collided = false;
    double ttc = 0.0;       // +inf when not closing
    bool lane_changed = false;
    double lateral_gap = 0.0;  // min bumper gap in the target lane at change time
};
double reward_safety_raw(const SafetyInputs& in, double ttc_threshold, double delta);
double reward_queue_raw(int queue_premerge, int queue_accel);
double reward_comfort_raw(double accel, double alpha_max);
double reward_deadlock_raw(double pos_on_lane, double lane_len);
double reward_lane_change_raw(bool changed_lane);

double reward_efficiency(const World& world, const Vehicle& agent);
double reward_safety(const World& world, const Vehicle& agent, bool collided);
double reward_queue(const World& world);
double reward_comfort(const World& world, const Vehicle& agent);
double reward_deadlock(const World& world, const Vehicle& agent);
double reward_lane_change(const Vehicle& agent);

RewardBreakdown combine_rewards(const std::array<double, 6>& raw,
                                const std::array<double, 6>& weights);

// all six components for one agent after a step; `collided` comes from the
// tick's collision events, `agent` may be a removed-vehicle snapshot
RewardBreakdown compute_rewards(const World& world, const Vehicle& agent, bool collided);

// status suggested by this tick's events and the live world; the caller owns
// the absorbing semantics across ticks
AgentStatus agent_status(const World& world, VehicleId agent_id,
                         const std::vector<SimEvent>& tick_events);

}  // namespace zmerge
