#pragma once

#include <memory>
#include <string>

#include "zmerge/env.hpp"
#include "zmerge/pdqn.hpp"

namespace zmerge {

// Decision-maker used during evaluation. Training drives the PDQN agent
// directly; everything here is execution-only.
class Policy {
public:
    virtual ~Policy() = default;
    virtual std::string name() const = 0;
    virtual HybridAction act(const World& world, const Vehicle& ego,
                             const Observation& obs, Rng& rng) = 0;
    // whether observations should have the RSU block zeroed before use
    virtual bool masks_global_block() const { return false; }
};

// zeroes the 8 RSU-derived entries; local-information-only ablation
void mask_global_block(Observation& obs);

std::unique_ptr<Policy> make_random_policy(const SimConfig& cfg);
std::unique_ptr<Policy> make_baseline1_policy();
std::unique_ptr<Policy> make_baseline2_policy();
// greedy PDQN execution; owns the agent
std::unique_ptr<Policy> make_pdqn_policy(PdqnAgent agent, bool mask_global,
                                         const std::string& name);

// kind: zmerge | baseline1 | baseline2 | baseline3 | random.
// checkpoint_path is required for the two network-backed kinds.
std::unique_ptr<Policy> make_policy(const std::string& kind, const SimConfig& cfg,
                                    const std::string& checkpoint_path);

}  // namespace zmerge
