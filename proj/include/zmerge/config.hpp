#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace zmerge {

// Simulation-side configuration. Defaults reproduce the reference scenario:
// 320 m segment, 3600/900 veh/h flows, 60% AV penetration, 0.1 s ticks.
struct SimConfig {
    // segment geometry, meters
    double warmup_len = 50.0;
    double premerge_len = 150.0;
    double merge_len = 100.0;
    double ramp_len = 100.0;
    double exit_buffer_len = 20.0;
    int mainline_lanes = 2;
    double lane_width = 3.5;

    // demand
    double mainline_flow_vph = 3600.0;  // per lane
    double ramp_flow_vph = 900.0;       // single ramp lane
    double penetration_rate = 0.60;     // fraction of spawns that are AVs
    double spawn_headway_min = 10.0;    // entry cell clearance, m
    double mainline_entry_speed = 32.0;
    double ramp_entry_speed = 10.0;
    double ramp_speed_limit = 12.0;  // feeder portion only; the acceleration
                                     // lane allows full v_max for speed matching

    // dynamics
    double dt = 0.1;
    double v_max = 32.0;
    double tau = 1.0;  // time gap offset, used as the IDM desired headway
    double vehicle_len = 5.0;
    double accel_min = -4.5;
    double accel_max_phys = 2.8;  // physical cap
    double accel_max_cmd = 2.6;   // agent command cap

    // human-driver models (IDM + MOBIL)
    double idm_a = 2.6;
    double idm_b = 4.5;
    double idm_s0 = 2.0;
    double idm_exponent = 4.0;
    double mobil_politeness = 0.3;
    double mobil_b_safe = 4.0;
    double mobil_a_thresh = 0.2;
    double lane_change_cooldown_s = 1.0;

    // AV gap controller
    double default_desired_gap = 10.0;
    double gap_kp = 0.5;   // 1/s^2
    double gap_kv = 1.0;   // 1/s

    // communication
    double v2v_range = 100.0;
    double v2x_range = 500.0;
    int max_neighbors = 6;

    // reward / safety parameters
    double ttc_threshold = 1.2;
    double lateral_safety = 12.0;   // delta, m
    double comfort_accel = 2.6;     // alpha_max
    double w_e = 1.0, w_s = 2.0, w_c = 0.5, w_q = 0.5, w_d = 1.0, w_l = 0.2;
    bool empty_zone_speed_is_vmax = false;

    // queue definition
    double queue_speed_thresh = 2.0;
    double queue_headway = 20.0;

    // deadlock detection at the acceleration-lane end
    double deadlock_speed = 0.5;
    double deadlock_time_s = 3.0;
    double deadlock_margin = 5.0;

    // action profiler
    double min_lane_change_gap = 2.0;

    std::uint64_t seed = 1;
    double episode_len_s = 400.0;
};

// Learner hyperparameters.
struct RlConfig {
    std::vector<int> hidden = {256, 512, 512, 128};
    double lr_critic = 1e-4;
    double lr_actor = 1e-4;
    double gamma = 0.995;
    int batch_size = 64;
    int replay_capacity = 100'000;
    int warmup_transitions = 1'000;
    double eps_init = 1.0;
    double eps_final = 0.01;
    double eps_decay = 0.999985;
    long sync_period = 35'000;
    double grad_clip = 10.0;
    double huber_delta = 1.0;
    int update_period = 1;  // env steps per gradient update
};

struct RunConfig {
    SimConfig sim;
    RlConfig rl;
    std::string mode = "train";    // train | eval
    std::string policy = "zmerge"; // zmerge | baseline1 | baseline2 | baseline3 | random
    int episodes = 100;
    std::string out_dir = "out";
    std::string checkpoint;        // input checkpoint for eval / baseline3
    int checkpoint_every = 50;     // episodes
    bool trace = false;
    bool log_rewards = false;
    int latency_iters = 6000;
};

// JSON round-trip for the flat config schema; unknown keys are rejected.
RunConfig load_run_config(const std::string& path);
RunConfig parse_run_config(const std::string& json_text);
std::string run_config_to_json(const RunConfig& cfg);

// ZMERGE_<UPPERCASE_KEY> environment variables override file values.
void apply_env_overrides(RunConfig& cfg);

}  // namespace zmerge
