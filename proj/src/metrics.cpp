#include "zmerge/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include <json.hpp>

#include "zmerge/csv.hpp"

namespace zmerge {

using nlohmann::json;

double vec_mean(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double vec_std(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = vec_mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size()));
}

namespace {

Aggregate aggregate_of(const std::vector<double>& values) {
    Aggregate a;
    if (values.empty()) return a;
    a.present = true;
    a.mean = vec_mean(values);
    a.stddev = vec_std(values);
    return a;
}

std::string policy_label(const PolicyEvalResult& r) {
    return r.policy + "@pr" + fmt_double(r.penetration_rate * 100.0);
}

}  // namespace

Aggregate agg_mean_speed(const PolicyEvalResult& r) {
    std::vector<double> v;
    for (const auto& e : r.episodes) v.push_back(e.mean_speed);
    return aggregate_of(v);
}

Aggregate agg_collision_rate(const PolicyEvalResult& r) {
    std::vector<double> v;
    for (const auto& e : r.episodes) v.push_back(e.collision_rate);
    return aggregate_of(v);
}

Aggregate agg_success_rate(const PolicyEvalResult& r) {
    std::vector<double> v;
    for (const auto& e : r.episodes) {
        if (e.success_rate) v.push_back(*e.success_rate);
    }
    return aggregate_of(v);
}

Aggregate agg_queue(const PolicyEvalResult& r) {
    std::vector<double> v;
    for (const auto& e : r.episodes) v.push_back(e.queue_time_avg);
    return aggregate_of(v);
}

void emit_reports(const std::vector<PolicyEvalResult>& results, const std::string& outdir) {
    namespace fs = std::filesystem;
    fs::create_directories(outdir);
    const auto path = [&](const char* f) { return (fs::path(outdir) / f).string(); };

    {
        CsvWriter w(path("speed_over_time.csv"));
        std::vector<std::string> header{"tick"};
        size_t max_len = 0;
        for (const auto& r : results) {
            header.push_back(policy_label(r));
            max_len = std::max(max_len, r.speed_over_time.size());
        }
        w.row(header);
        for (size_t t = 0; t < max_len; ++t) {
            std::vector<std::string> row{std::to_string(t)};
            for (const auto& r : results) {
                row.push_back(t < r.speed_over_time.size()
                                  ? fmt_double(r.speed_over_time[t])
                                  : std::string());
            }
            w.row(row);
        }
    }
    {
        CsvWriter w(path("spacetime.csv"));
        w.row({"policy", "pr", "cell_x_m", "bin_t_s", "mean_speed"});
        for (const auto& r : results) {
            const auto& g = r.spacetime;
            for (int c = 0; c < g.cells; ++c) {
                for (int b = 0; b < g.bins; ++b) {
                    const size_t i = static_cast<size_t>(c) * g.bins + b;
                    std::string mean;
                    if (g.count[i] > 0) {
                        mean = fmt_double(g.speed_sum[i] / static_cast<double>(g.count[i]));
                    }
                    w.row({r.policy, fmt_double(r.penetration_rate),
                           fmt_double(g.origin + c * g.cell_len), std::to_string(b), mean});
                }
            }
        }
    }
    {
        CsvWriter w(path("queue_vs_pr.csv"));
        w.row({"pr", "policy", "queue_mean", "queue_std"});
        for (const auto& r : results) {
            const auto q = agg_queue(r);
            w.row({fmt_double(r.penetration_rate), r.policy, fmt_double(q.mean),
                   fmt_double(q.stddev)});
        }
    }
    {
        CsvWriter w(path("comfort_traces.csv"));
        w.row({"policy", "pr", "route", "vehicle_id", "t_s", "accel"});
        for (const auto& r : results) {
            for (const auto& tr : r.rep_traces) {
                for (size_t i = 0; i < tr.accel.size(); ++i) {
                    w.row({r.policy, fmt_double(r.penetration_rate),
                           tr.route == Route::Ramp ? "ramp" : "mainline",
                           std::to_string(tr.id), fmt_double(static_cast<double>(i) * 0.1),
                           fmt_double(tr.accel[i])});
                }
            }
        }
    }
    {
        CsvWriter w(path("latency_cdf.csv"));
        w.row({"policy", "latency_ms", "cum_fraction"});
        CsvWriter ws(path("latency_summary.csv"));
        ws.row({"policy", "mean_ms", "p90_ms", "samples"});
        for (const auto& r : results) {
            if (r.latency_ms.empty()) continue;
            auto sorted = r.latency_ms;
            std::sort(sorted.begin(), sorted.end());
            const double n = static_cast<double>(sorted.size());
            for (size_t i = 0; i < sorted.size(); ++i) {
                w.row({r.policy, fmt_double(sorted[i]),
                       fmt_double(static_cast<double>(i + 1) / n)});
            }
            const size_t p90_idx =
                std::min(sorted.size() - 1,
                         static_cast<size_t>(std::ceil(0.9 * n)) - 1);
            ws.row({r.policy, fmt_double(vec_mean(sorted)), fmt_double(sorted[p90_idx]),
                    std::to_string(sorted.size())});
        }
    }
    {
        CsvWriter w(path("summary.csv"));
        w.row({"pr", "policy", "efficiency_mean", "efficiency_std", "safety_mean",
               "safety_std", "success_mean", "success_std"});
        for (const auto& r : results) {
            const auto eff = agg_mean_speed(r);
            const auto col = agg_collision_rate(r);
            const auto suc = agg_success_rate(r);
            w.row({fmt_double(r.penetration_rate), r.policy, fmt_double(eff.mean),
                   fmt_double(eff.stddev), fmt_double(col.mean), fmt_double(col.stddev),
                   suc.present ? fmt_double(suc.mean) : std::string(),
                   suc.present ? fmt_double(suc.stddev) : std::string()});
        }
    }
}

namespace {

json trace_to_json(const AccelTrace& t) {
    return json{{"id", t.id},
                {"route", t.route == Route::Ramp ? "ramp" : "mainline"},
                {"spawn_tick", t.spawn_tick},
                {"accel", t.accel}};
}

AccelTrace trace_from_json(const json& j) {
    AccelTrace t;
    t.id = j.at("id").get<VehicleId>();
    t.route = j.at("route").get<std::string>() == "ramp" ? Route::Ramp : Route::Mainline;
    t.spawn_tick = j.at("spawn_tick").get<long>();
    t.accel = j.at("accel").get<std::vector<double>>();
    return t;
}

}  // namespace

std::string eval_results_to_json(const std::vector<PolicyEvalResult>& results) {
    json out = json::array();
    for (const auto& r : results) {
        json episodes = json::array();
        for (const auto& e : r.episodes) {
            json je{{"avg_speed_series", e.avg_speed_series},
                    {"queue_series", e.queue_series},
                    {"spawned_avs", e.spawned_avs},
                    {"collided_avs", e.collided_avs},
                    {"ramp_avs", e.ramp_avs},
                    {"merged_ramp_avs", e.merged_ramp_avs},
                    {"mean_speed", e.mean_speed},
                    {"collision_rate", e.collision_rate},
                    {"queue_time_avg", e.queue_time_avg}};
            if (e.success_rate) je["success_rate"] = *e.success_rate;
            episodes.push_back(std::move(je));
        }
        json jr{{"policy", r.policy},
                {"penetration_rate", r.penetration_rate},
                {"episodes", std::move(episodes)},
                {"speed_over_time", r.speed_over_time},
                {"spacetime",
                 json{{"cells", r.spacetime.cells},
                      {"bins", r.spacetime.bins},
                      {"origin", r.spacetime.origin},
                      {"cell_len", r.spacetime.cell_len},
                      {"speed_sum", r.spacetime.speed_sum},
                      {"count", r.spacetime.count}}}};
        json traces = json::array();
        for (const auto& t : r.rep_traces) traces.push_back(trace_to_json(t));
        jr["rep_traces"] = std::move(traces);
        out.push_back(std::move(jr));
    }
    return out.dump(2);
}

std::vector<PolicyEvalResult> eval_results_from_json(const std::string& text) {
    const json in = json::parse(text);
    std::vector<PolicyEvalResult> out;
    for (const auto& jr : in) {
        PolicyEvalResult r;
        r.policy = jr.at("policy").get<std::string>();
        r.penetration_rate = jr.at("penetration_rate").get<double>();
        for (const auto& je : jr.at("episodes")) {
            EpisodeMetrics e;
            e.avg_speed_series = je.at("avg_speed_series").get<std::vector<double>>();
            e.queue_series = je.at("queue_series").get<std::vector<int>>();
            e.spawned_avs = je.at("spawned_avs").get<long>();
            e.collided_avs = je.at("collided_avs").get<long>();
            e.ramp_avs = je.at("ramp_avs").get<long>();
            e.merged_ramp_avs = je.at("merged_ramp_avs").get<long>();
            e.mean_speed = je.at("mean_speed").get<double>();
            e.collision_rate = je.at("collision_rate").get<double>();
            e.queue_time_avg = je.at("queue_time_avg").get<double>();
            if (je.contains("success_rate")) e.success_rate = je.at("success_rate").get<double>();
            r.episodes.push_back(std::move(e));
        }
        r.speed_over_time = jr.at("speed_over_time").get<std::vector<double>>();
        const auto& jg = jr.at("spacetime");
        r.spacetime.cells = jg.at("cells").get<int>();
        r.spacetime.bins = jg.at("bins").get<int>();
        r.spacetime.origin = jg.at("origin").get<double>();
        r.spacetime.cell_len = jg.at("cell_len").get<double>();
        r.spacetime.speed_sum = jg.at("speed_sum").get<std::vector<double>>();
        r.spacetime.count = jg.at("count").get<std::vector<long>>();
        for (const auto& jt : jr.at("rep_traces")) r.rep_traces.push_back(trace_from_json(jt));
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace zmerge
