#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "zmerge/sim.hpp"
#include "zmerge/v2x.hpp"

namespace zmerge {

// Line-delimited JSON trace: one record per tick with vehicle states, events,
// and the RSU summary.
class TraceWriter {
public:
    explicit TraceWriter(const std::string& path);
    void write_tick(const World& world, const std::vector<SimEvent>& events,
                    const GlobalSummary& summary);
    void mark_episode(int episode);

private:
    std::ofstream os_;
};

}  // namespace zmerge
