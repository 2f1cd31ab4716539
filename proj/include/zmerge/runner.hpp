#pragma once

#include <functional>
#include <optional>
#include <string>

#include "zmerge/config.hpp"
#include "zmerge/metrics.hpp"
#include "zmerge/pdqn.hpp"
#include "zmerge/policies.hpp"
#include "zmerge/sim.hpp"

namespace zmerge {

struct TrainResult {
    std::string checkpoint_path;
    long env_steps = 0;
    long gradient_steps = 0;
    int episodes = 0;
};

// called after every successful learner update
using UpdateObserver =
    std::function<void(const PdqnAgent& agent, const PdqnAgent::UpdateStats& stats)>;

// Centralized training with parameter sharing: every AV acts with the shared
// networks and feeds the shared replay buffer; one learner update per tick.
TrainResult run_training(const RunConfig& cfg, const UpdateObserver& observer = {});

// Episode rollouts with a fixed policy (exploration off); aggregates metrics.
PolicyEvalResult run_evaluation(const RunConfig& cfg, const std::string& policy_kind);

// wall-clock of full observe/act/step/observe cycles, milliseconds
std::vector<double> measure_inference_latency(const RunConfig& cfg, Policy& policy, int n);

}  // namespace zmerge
