#include "zmerge/trace.hpp"

#include <stdexcept>

#include <json.hpp>

namespace zmerge {

using nlohmann::json;

TraceWriter::TraceWriter(const std::string& path) : os_(path) {
    if (!os_) throw std::runtime_error("trace: cannot open " + path);
}

void TraceWriter::mark_episode(int episode) {
    os_ << json{{"episode", episode}}.dump() << '\n';
}

void TraceWriter::write_tick(const World& world, const std::vector<SimEvent>& events,
                             const GlobalSummary& summary) {
    json vehicles = json::array();
    for (const auto& v : world.vehicles()) {
        vehicles.push_back(json{{"id", v.id},
                                {"role", v.role == Role::AV ? "av" : "hv"},
                                {"route", v.route == Route::Ramp ? "ramp" : "mainline"},
                                {"lane", v.lane},
                                {"pos", v.pos},
                                {"speed", v.speed},
                                {"accel", v.accel},
                                {"merged", v.merged}});
    }
    json jevents = json::array();
    for (const auto& e : events) {
        json je{{"type", event_name(e.type)}, {"a", e.a}};
        if (e.type == SimEventType::Collision) je["b"] = e.b;
        jevents.push_back(std::move(je));
    }
    const json record{
        {"tick", world.tick()},
        {"vehicles", std::move(vehicles)},
        {"events", std::move(jevents)},
        {"summary",
         json{{"premerge_speed", summary.premerging.avg_speed},
              {"premerge_density", summary.premerging.density},
              {"merge_speed", summary.merging.avg_speed},
              {"merge_density", summary.merging.density},
              {"ramp_speed", summary.ramp.avg_speed},
              {"ramp_density", summary.ramp.density},
              {"queue_premerge", summary.queue_premerge},
              {"queue_accel", summary.queue_accel}}}};
    os_ << record.dump() << '\n';
}

}  // namespace zmerge
