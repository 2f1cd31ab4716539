#pragma once

#include <optional>
#include <string>
#include <vector>

#include "zmerge/config.hpp"
#include "zmerge/vehicle.hpp"

namespace zmerge {

struct AccelTrace {
    VehicleId id = 0;
    Route route = Route::Mainline;
    long spawn_tick = 0;
    std::vector<double> accel;
};

struct EpisodeMetrics {
    std::vector<double> avg_speed_series;  // per-tick mean speed, 0 when empty
    std::vector<int> queue_series;         // Q_p + Q_a per tick
    long spawned_avs = 0;
    long collided_avs = 0;
    long ramp_avs = 0;
    long merged_ramp_avs = 0;
    double mean_speed = 0.0;  // vehicle-tick weighted over the episode
    double collision_rate = 0.0;
    std::optional<double> success_rate;  // absent when no ramp AVs spawned
    double queue_time_avg = 0.0;
    std::vector<AccelTrace> traces;  // all AV traces (not serialized)
};

// mean speed accumulated per (10 m cell x 1 s bin) over the pre-merging and
// merging zones
struct SpacetimeGrid {
    int cells = 0;
    int bins = 0;
    double origin = 0.0;
    double cell_len = 10.0;
    std::vector<double> speed_sum;
    std::vector<long> count;
};

struct PolicyEvalResult {
    std::string policy;
    double penetration_rate = 0.0;
    std::vector<EpisodeMetrics> episodes;
    std::vector<double> speed_over_time;  // element-wise mean across episodes
    SpacetimeGrid spacetime;
    std::vector<AccelTrace> rep_traces;  // highest-variation mainline + ramp AV
    std::vector<double> latency_ms;      // wall-clock; excluded from determinism
};

double vec_mean(const std::vector<double>& v);
double vec_std(const std::vector<double>& v);  // population std

struct Aggregate {
    double mean = 0.0;
    double stddev = 0.0;
    bool present = false;
};

Aggregate agg_mean_speed(const PolicyEvalResult& r);
Aggregate agg_collision_rate(const PolicyEvalResult& r);
Aggregate agg_success_rate(const PolicyEvalResult& r);
Aggregate agg_queue(const PolicyEvalResult& r);

// writes speed_over_time.csv, spacetime.csv, queue_vs_pr.csv,
// comfort_traces.csv, latency_cdf.csv, latency_summary.csv, summary.csv
void emit_reports(const std::vector<PolicyEvalResult>& results, const std::string& outdir);

// metrics.json round-trip used by the report subcommand; latency samples are
// kept out so the file is reproducible for a fixed seed
std::string eval_results_to_json(const std::vector<PolicyEvalResult>& results);
std::vector<PolicyEvalResult> eval_results_from_json(const std::string& text);

}  // namespace zmerge
