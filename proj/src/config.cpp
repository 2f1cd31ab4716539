#include "zmerge/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace zmerge {

using nlohmann::json;

namespace {

// One registry drives JSON load/save and environment overrides. The visitor
// is called with (key, reference) for every settable field.
template <typename F>
void for_each_field(RunConfig& c, F&& f) {
    SimConfig& s = c.sim;
    RlConfig& r = c.rl;
    f("warmup_len", s.warmup_len);
    f("premerge_len", s.premerge_len);
    f("merge_len", s.merge_len);
    f("ramp_len", s.ramp_len);
    f("exit_buffer_len", s.exit_buffer_len);
    f("mainline_lanes", s.mainline_lanes);
    f("lane_width", s.lane_width);
    f("mainline_flow_vph", s.mainline_flow_vph);
    f("ramp_flow_vph", s.ramp_flow_vph);
    f("penetration_rate", s.penetration_rate);
    f("spawn_headway_min", s.spawn_headway_min);
    f("mainline_entry_speed", s.mainline_entry_speed);
    f("ramp_entry_speed", s.ramp_entry_speed);
    f("ramp_speed_limit", s.ramp_speed_limit);
    f("dt", s.dt);
    f("v_max", s.v_max);
    f("tau", s.tau);
    f("vehicle_len", s.vehicle_len);
    f("accel_min", s.accel_min);
    f("accel_max_phys", s.accel_max_phys);
    f("accel_max_cmd", s.accel_max_cmd);
    f("idm_a", s.idm_a);
    f("idm_b", s.idm_b);
    f("idm_s0", s.idm_s0);
    f("idm_exponent", s.idm_exponent);
    f("mobil_politeness", s.mobil_politeness);
    f("mobil_b_safe", s.mobil_b_safe);
    f("mobil_a_thresh", s.mobil_a_thresh);
    f("lane_change_cooldown_s", s.lane_change_cooldown_s);
    f("default_desired_gap", s.default_desired_gap);
    f("gap_kp", s.gap_kp);
    f("gap_kv", s.gap_kv);
    f("v2v_range", s.v2v_range);
    f("v2x_range", s.v2x_range);
    f("max_neighbors", s.max_neighbors);
    f("ttc_threshold", s.ttc_threshold);
    f("lateral_safety", s.lateral_safety);
    f("comfort_accel", s.comfort_accel);
    f("w_e", s.w_e);
    f("w_s", s.w_s);
    f("w_c", s.w_c);
    f("w_q", s.w_q);
    f("w_d", s.w_d);
    f("w_l", s.w_l);
    f("empty_zone_speed_is_vmax", s.empty_zone_speed_is_vmax);
    f("queue_speed_thresh", s.queue_speed_thresh);
    f("queue_headway", s.queue_headway);
    f("deadlock_speed", s.deadlock_speed);
    f("deadlock_time_s", s.deadlock_time_s);
    f("deadlock_margin", s.deadlock_margin);
    f("min_lane_change_gap", s.min_lane_change_gap);
    f("seed", s.seed);
    f("episode_len_s", s.episode_len_s);
    f("hidden_layers", r.hidden);
    f("lr_critic", r.lr_critic);
    f("lr_actor", r.lr_actor);
    f("gamma", r.gamma);
    f("batch_size", r.batch_size);
    f("replay_capacity", r.replay_capacity);
    f("warmup_transitions", r.warmup_transitions);
    f("eps_init", r.eps_init);
    f("eps_final", r.eps_final);
    f("eps_decay", r.eps_decay);
    f("sync_period", r.sync_period);
    f("grad_clip", r.grad_clip);
    f("huber_delta", r.huber_delta);
    f("update_period", r.update_period);
    f("mode", c.mode);
    f("policy", c.policy);
    f("episodes", c.episodes);
    f("out_dir", c.out_dir);
    f("checkpoint", c.checkpoint);
    f("checkpoint_every", c.checkpoint_every);
    f("trace", c.trace);
    f("log_rewards", c.log_rewards);
    f("latency_iters", c.latency_iters);
}

struct JsonWriter {
    json& out;
    template <typename T>
    void operator()(const char* key, const T& value) {
        out[key] = value;
    }
};

struct JsonReader {
    const json& in;
    template <typename T>
    void operator()(const char* key, T& value) {
        if (in.contains(key)) value = in.at(key).get<T>();
    }
};

struct KeyCollector {
    std::vector<std::string>& keys;
    template <typename T>
    void operator()(const char* key, const T&) {
        keys.emplace_back(key);
    }
};

void assign_from_string(double& v, const std::string& s) { v = std::stod(s); }
void assign_from_string(int& v, const std::string& s) { v = std::stoi(s); }
void assign_from_string(long& v, const std::string& s) { v = std::stol(s); }
void assign_from_string(std::uint64_t& v, const std::string& s) { v = std::stoull(s); }
void assign_from_string(bool& v, const std::string& s) {
    v = s == "1" || s == "true" || s == "TRUE";
}
void assign_from_string(std::string& v, const std::string& s) { v = s; }
void assign_from_string(std::vector<int>& v, const std::string& s) {
    v.clear();
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) v.push_back(std::stoi(item));
    }
}

struct EnvReader {
    template <typename T>
    void operator()(const char* key, T& value) {
        std::string name = "ZMERGE_";
        for (const char* p = key; *p; ++p) {
            name += static_cast<char>(std::toupper(static_cast<unsigned char>(*p)));
        }
        if (const char* env = std::getenv(name.c_str())) {
            assign_from_string(value, env);
        }
    }
};

}  // namespace

std::string run_config_to_json(const RunConfig& cfg) {
    json out;
    JsonWriter w{out};
    for_each_field(const_cast<RunConfig&>(cfg), w);
    return out.dump(2);
}

RunConfig parse_run_config(const std::string& text) {
    json in;
    try {
        in = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::runtime_error(std::string("config: invalid JSON: ") + e.what());
    }
    if (!in.is_object()) throw std::runtime_error("config: top level must be an object");
    RunConfig cfg;
    std::vector<std::string> known;
    KeyCollector kc{known};
    for_each_field(cfg, kc);
    for (const auto& [key, _] : in.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            throw std::runtime_error("config: unknown key '" + key + "'");
        }
    }
    JsonReader r{in};
    for_each_field(cfg, r);
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("config: cannot open " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_run_config(ss.str());
}

void apply_env_overrides(RunConfig& cfg) {
    EnvReader r;
    for_each_field(cfg, r);
}

}  // namespace zmerge
