#include "zmerge/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>

#include "zmerge/csv.hpp"
#include "zmerge/env.hpp"
#include "zmerge/trace.hpp"
#include "zmerge/v2x.hpp"

namespace zmerge {

namespace fs = std::filesystem;

namespace {

long ticks_per_episode(const SimConfig& sim) {
    return std::lround(sim.episode_len_s / sim.dt);
}

std::vector<VehicleId> active_av_ids(const World& world,
                                     const std::set<VehicleId>& terminated) {
    std::vector<VehicleId> ids;
    for (const auto& v : world.vehicles()) {
        if (v.role == Role::AV && !terminated.count(v.id)) ids.push_back(v.id);
    }
    std::sort(ids.begin(), ids.end());
    return ids;
}

bool collided_in(const std::vector<SimEvent>& events, VehicleId id) {
    for (const auto& e : events) {
        if (e.type == SimEventType::Collision && (e.a == id || e.b == id)) return true;
    }
    return false;
}

void write_config_echo(const RunConfig& cfg) {
    std::ofstream os(fs::path(cfg.out_dir) / "config.json");
    os << run_config_to_json(cfg) << '\n';
}

struct TickStats {
    double mean_speed = 0.0;
    int vehicle_count = 0;
    int queue_sum = 0;
};

TickStats tick_stats(const World& world) {
    TickStats s;
    double sum = 0.0;
    for (const auto& v : world.vehicles()) {
        sum += v.speed;
        ++s.vehicle_count;
    }
    s.mean_speed = s.vehicle_count ? sum / s.vehicle_count : 0.0;
    const auto [qp, qa] = world.queue_lengths();
    s.queue_sum = qp + qa;
    return s;
}

}  // namespace

TrainResult run_training(const RunConfig& cfg, const UpdateObserver& observer) {
    if (cfg.policy != "zmerge" && cfg.policy != "baseline3") {
        throw std::runtime_error("train mode supports the zmerge and baseline3 policies");
    }
    const bool mask_global = cfg.policy == "baseline3";
    const SimConfig& sim = cfg.sim;

    fs::create_directories(cfg.out_dir);
    write_config_echo(cfg);

    Rng master(sim.seed);
    Rng init_rng = master.fork(1);
    Rng explore_rng = master.fork(2);
    const std::uint64_t world_seed = master.next_u64();

    World world(sim, world_seed);
    PdqnAgent agent(cfg.rl, sim, init_rng);
    ReplayBuffer replay(static_cast<std::size_t>(cfg.rl.replay_capacity));

    CsvWriter train_log((fs::path(cfg.out_dir) / "training_log.csv").string());
    train_log.row({"episode", "env_steps", "epsilon", "critic_loss", "actor_loss",
                   "mean_reward", "transitions", "ramp_avs", "merged_ramp_avs",
                   "collided_avs"});
    std::optional<CsvWriter> reward_log;
    if (cfg.log_rewards) {
        reward_log.emplace((fs::path(cfg.out_dir) / "reward_log.csv").string());
        reward_log->row({"tick", "agent", "r_e", "r_s", "r_c", "r_q", "r_d", "r_l",
                         "sq_e", "sq_s", "sq_c", "sq_q", "sq_d", "sq_l", "total"});
    }
    std::optional<TraceWriter> tracer;
    if (cfg.trace) tracer.emplace((fs::path(cfg.out_dir) / "trace.ndjson").string());

    const long ep_ticks = ticks_per_episode(sim);
    long env_steps = 0;
    const std::string checkpoint_path = (fs::path(cfg.out_dir) / "checkpoint.bin").string();

    struct Pending {
        VehicleId id;
        Observation s;
        HybridAction a;
    };
    std::vector<Pending> acted;

    for (int ep = 0; ep < cfg.episodes; ++ep) {
        world.reset();
        if (tracer) tracer->mark_episode(ep);
        std::set<VehicleId> terminated;
        std::set<VehicleId> merged_agents;
        double ep_reward_sum = 0.0;
        long ep_transitions = 0;
        double ep_critic_loss = 0.0, ep_actor_loss = 0.0;
        long ep_updates = 0;
        long ep_merged = 0, ep_collided = 0;

        for (long t = 0; t < ep_ticks; ++t) {
            const GlobalSummary summary = rsu_broadcast(world);
            const double eps = agent.epsilon_now(env_steps);
            acted.clear();
            for (VehicleId id : active_av_ids(world, terminated)) {
                Observation s = build_observation(world, summary, id);
                if (mask_global) mask_global_block(s);
                const HybridAction proposed = agent.select_action(s, eps, explore_rng);
                const HybridAction a = validate_action(world, id, proposed);
                apply_action(world, id, a);
                acted.push_back({id, s, a});
            }

            const auto events = world.step();
            const GlobalSummary next_summary = rsu_broadcast(world);

            for (const auto& p : acted) {
                const Vehicle* post = world.find_post_step(p.id);
                if (!post) continue;  // unreachable: removals are snapshotted
                const bool collided = collided_in(events, p.id);
                const RewardBreakdown rb = compute_rewards(world, *post, collided);
                const AgentStatus status = agent_status(world, p.id, events);
                Transition tr;
                tr.s = p.s;
                tr.k = p.a.k;
                tr.has_x = p.a.x.has_value();
                tr.x_k = p.a.x.value_or(0.0);
                tr.r = rb.total;
                tr.terminal = is_terminal(status);
                if (!tr.terminal) {
                    tr.s_next = build_observation(world, next_summary, p.id);
                    if (mask_global) mask_global_block(tr.s_next);
                }
                replay.push(tr);
                ep_reward_sum += rb.total;
                ++ep_transitions;
                if (tr.terminal) terminated.insert(p.id);
                if (status == AgentStatus::MergedOk) merged_agents.insert(p.id);
                if (reward_log) {
                    std::vector<std::string> row{std::to_string(world.tick() - 1),
                                                 std::to_string(p.id)};
                    for (double v : rb.raw) row.push_back(fmt_double(v));
                    for (double v : rb.squashed) row.push_back(fmt_double(v));
                    row.push_back(fmt_double(rb.total));
                    reward_log->row(row);
                }
            }
            for (const auto& e : events) {
                if (e.type != SimEventType::Collision) continue;
                for (VehicleId id : {e.a, e.b}) {
                    const Vehicle* v = world.find_post_step(id);
                    if (v && v->role == Role::AV) ++ep_collided;
                }
            }
            if (tracer) tracer->write_tick(world, events, next_summary);

            ++env_steps;
            if (env_steps % cfg.rl.update_period == 0) {
                if (const auto stats = agent.update(replay, explore_rng)) {
                    if (!std::isfinite(stats->critic_loss) ||
                        !std::isfinite(stats->actor_loss)) {
                        agent.save_file(checkpoint_path + ".diverged");
                        throw std::runtime_error(
                            "training diverged: non-finite loss at gradient step " +
                            std::to_string(agent.gradient_steps()));
                    }
                    ep_critic_loss += stats->critic_loss;
                    ep_actor_loss += stats->actor_loss;
                    ++ep_updates;
                    if (observer) observer(agent, *stats);
                }
            }
        }

        ep_merged = static_cast<long>(merged_agents.size());
        train_log.row({std::to_string(ep), std::to_string(env_steps),
                       fmt_double(agent.epsilon_now(env_steps)),
                       fmt_double(ep_updates ? ep_critic_loss / ep_updates : 0.0),
                       fmt_double(ep_updates ? ep_actor_loss / ep_updates : 0.0),
                       fmt_double(ep_transitions ? ep_reward_sum / ep_transitions : 0.0),
                       std::to_string(ep_transitions),
                       std::to_string(world.counters().spawned_ramp_avs),
                       std::to_string(ep_merged), std::to_string(ep_collided)});
        train_log.flush();
        if (cfg.checkpoint_every > 0 && (ep + 1) % cfg.checkpoint_every == 0) {
            agent.save_file(checkpoint_path);
        }
    }
    agent.save_file(checkpoint_path);

    TrainResult result;
    result.checkpoint_path = checkpoint_path;
    result.env_steps = env_steps;
    result.gradient_steps = agent.gradient_steps();
    result.episodes = cfg.episodes;
    return result;
}

PolicyEvalResult run_evaluation(const RunConfig& cfg, const std::string& policy_kind) {
    const SimConfig& sim = cfg.sim;
    auto policy = make_policy(policy_kind, sim, cfg.checkpoint);

    Rng master(sim.seed);
    (void)master.fork(1);  // keep stream layout aligned with training
    Rng policy_rng = master.fork(2);
    const std::uint64_t world_seed = master.next_u64();
    World world(sim, world_seed);

    std::optional<TraceWriter> tracer;
    if (cfg.trace && !cfg.out_dir.empty()) {
        fs::create_directories(cfg.out_dir);
        tracer.emplace((fs::path(cfg.out_dir) / "trace.ndjson").string());
    }

    const long ep_ticks = ticks_per_episode(sim);
    const auto& net = world.network();

    PolicyEvalResult result;
    result.policy = policy->name();
    result.penetration_rate = sim.penetration_rate;
    result.spacetime.origin = net.premerge_start();
    result.spacetime.cell_len = 10.0;
    result.spacetime.cells = static_cast<int>(
        std::lround((net.merge_point() - net.premerge_start()) / 10.0));
    result.spacetime.bins = static_cast<int>(std::lround(sim.episode_len_s));
    result.spacetime.speed_sum.assign(
        static_cast<size_t>(result.spacetime.cells) * result.spacetime.bins, 0.0);
    result.spacetime.count.assign(result.spacetime.speed_sum.size(), 0);

    std::vector<double> speed_sum_over_time(static_cast<size_t>(ep_ticks), 0.0);

    for (int ep = 0; ep < cfg.episodes; ++ep) {
        world.reset();
        if (tracer) tracer->mark_episode(ep);
        std::set<VehicleId> terminated;
        std::set<VehicleId> merged_ramp, collided_ids;
        EpisodeMetrics em;
        std::map<VehicleId, AccelTrace> traces;
        double speed_weighted_sum = 0.0;
        long vehicle_ticks = 0;

        for (long t = 0; t < ep_ticks; ++t) {
            const GlobalSummary summary = rsu_broadcast(world);
            for (VehicleId id : active_av_ids(world, terminated)) {
                Observation s = build_observation(world, summary, id);
                if (policy->masks_global_block()) mask_global_block(s);
                const Vehicle* ego = world.find(id);
                const HybridAction a =
                    validate_action(world, id, policy->act(world, *ego, s, policy_rng));
                apply_action(world, id, a);
            }
            const auto events = world.step();
            if (tracer) tracer->write_tick(world, events, rsu_broadcast(world));

            for (const auto& p : world.vehicles()) {
                if (p.role != Role::AV) continue;
                auto [it, inserted] = traces.try_emplace(p.id);
                if (inserted) {
                    it->second.id = p.id;
                    it->second.route = p.route;
                    it->second.spawn_tick = p.spawn_tick;
                }
                it->second.accel.push_back(p.accel);
            }
            for (VehicleId id : active_av_ids(world, terminated)) {
                const AgentStatus status = agent_status(world, id, events);
                if (is_terminal(status)) terminated.insert(id);
                if (status == AgentStatus::MergedOk) merged_ramp.insert(id);
            }
            // collisions may involve AVs that were already terminated (e.g.
            // merged vehicles hit later); count every collided AV
            for (const auto& e : events) {
                if (e.type != SimEventType::Collision) continue;
                for (VehicleId id : {e.a, e.b}) {
                    collided_ids.insert(id);
                    if (const Vehicle* v = world.find_post_step(id)) {
                        if (v->role == Role::AV) ++em.collided_avs;
                    }
                    terminated.insert(id);
                }
            }

            const TickStats ts = tick_stats(world);
            em.avg_speed_series.push_back(ts.mean_speed);
            em.queue_series.push_back(ts.queue_sum);
            speed_weighted_sum += ts.mean_speed * ts.vehicle_count;
            vehicle_ticks += ts.vehicle_count;

            // spacetime accumulation over the pre-merging + merging zones
            const int bin = static_cast<int>(static_cast<double>(t) * sim.dt);
            const int bin_idx = std::clamp(bin, 0, result.spacetime.bins - 1);
            for (const auto& v : world.vehicles()) {
                if (v.pos < net.premerge_start() || v.pos >= net.merge_point()) continue;
                if (v.lane < 1 && !net.on_accel_lane(v.lane, v.pos)) continue;
                const int cell = static_cast<int>((v.pos - net.premerge_start()) / 10.0);
                if (cell < 0 || cell >= result.spacetime.cells) continue;
                const size_t idx =
                    static_cast<size_t>(cell) * result.spacetime.bins + bin_idx;
                result.spacetime.speed_sum[idx] += v.speed;
                ++result.spacetime.count[idx];
            }
        }

        // a successful merge must also survive: reaching the mainline and
        // colliding afterwards is not a successful merge
        for (VehicleId id : merged_ramp) {
            if (!collided_ids.count(id)) ++em.merged_ramp_avs;
        }
        em.spawned_avs = world.counters().spawned_avs;
        em.ramp_avs = world.counters().spawned_ramp_avs;
        em.mean_speed = vehicle_ticks ? speed_weighted_sum / vehicle_ticks : 0.0;
        em.collision_rate =
            em.spawned_avs ? static_cast<double>(em.collided_avs) / em.spawned_avs : 0.0;
        if (em.ramp_avs > 0) {
            em.success_rate = static_cast<double>(em.merged_ramp_avs) / em.ramp_avs;
        }
        double qsum = 0.0;
        for (int q : em.queue_series) qsum += q;
        em.queue_time_avg = em.queue_series.empty() ? 0.0 : qsum / em.queue_series.size();
        for (auto& [id, tr] : traces) em.traces.push_back(std::move(tr));
        for (size_t t = 0; t < em.avg_speed_series.size(); ++t) {
            speed_sum_over_time[t] += em.avg_speed_series[t];
        }
        result.episodes.push_back(std::move(em));
    }

    if (!result.episodes.empty()) {
        result.speed_over_time.resize(speed_sum_over_time.size());
        for (size_t t = 0; t < speed_sum_over_time.size(); ++t) {
            result.speed_over_time[t] =
                speed_sum_over_time[t] / static_cast<double>(result.episodes.size());
        }
    }

    // representative comfort traces: highest accel variance per route
    for (Route route : {Route::Mainline, Route::Ramp}) {
        const AccelTrace* best = nullptr;
        double best_var = -1.0;
        for (const auto& e : result.episodes) {
            for (const auto& tr : e.traces) {
                if (tr.route != route || tr.accel.size() < 2) continue;
                const double var = vec_std(tr.accel);
                if (var > best_var) {
                    best_var = var;
                    best = &tr;
                }
            }
        }
        if (best) result.rep_traces.push_back(*best);
    }
    return result;
}

std::vector<double> measure_inference_latency(const RunConfig& cfg, Policy& policy, int n) {
    const SimConfig& sim = cfg.sim;
    Rng master(sim.seed);
    (void)master.fork(1);
    Rng policy_rng = master.fork(2);
    World world(sim, master.next_u64());

    std::vector<double> samples;
    samples.reserve(static_cast<size_t>(std::max(n, 0)));
    std::set<VehicleId> terminated;
    using clock = std::chrono::steady_clock;
    for (int i = 0; i < n; ++i) {
        const auto t0 = clock::now();
        const GlobalSummary summary = rsu_broadcast(world);
        for (VehicleId id : active_av_ids(world, terminated)) {
            Observation s = build_observation(world, summary, id);
            if (policy.masks_global_block()) mask_global_block(s);
            const Vehicle* ego = world.find(id);
            const HybridAction a =
                validate_action(world, id, policy.act(world, *ego, s, policy_rng));
            apply_action(world, id, a);
        }
        const auto events = world.step();
        const GlobalSummary next_summary = rsu_broadcast(world);
        for (VehicleId id : active_av_ids(world, terminated)) {
            (void)build_observation(world, next_summary, id);
        }
        for (VehicleId id : active_av_ids(world, terminated)) {
            if (is_terminal(agent_status(world, id, events))) terminated.insert(id);
        }
        const auto t1 = clock::now();
        samples.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    return samples;
}

}  // namespace zmerge
