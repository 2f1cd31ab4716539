#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "zmerge/config.hpp"
#include "zmerge/env.hpp"
#include "zmerge/neural.hpp"
#include "zmerge/rng.hpp"

namespace zmerge {

struct Transition {
    Observation s{};
    int k = 0;
    bool has_x = false;
    double x_k = 0.0;  // recorded continuous argument, valid iff has_x
    double r = 0.0;
    Observation s_next{};
    bool terminal = false;

    bool operator==(const Transition&) const = default;
};

// Fixed-capacity ring shared by every agent; uniform sampling without
// replacement within a batch.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {}

    void push(const Transition& t);
    std::size_t size() const { return data_.size(); }
    std::size_t capacity() const { return capacity_; }
    const Transition& at(std::size_t i) const { return data_[i]; }

    // Floyd's algorithm: n distinct indices, order deterministic in the stream
    std::vector<std::size_t> sample_indices(std::size_t n, Rng& rng) const;

private:
    std::size_t capacity_;
    std::size_t head_ = 0;
    std::vector<Transition> data_;
};

// Shared critic/actor pair with target copies: the critic maps
// state ++ joint-continuous-vector (44 inputs) to one Q-value per discrete
// action; the actor maps the state to the two continuous arguments through a
// scaled tanh.
class PdqnAgent {
public:
    PdqnAgent(const RlConfig& rl, const SimConfig& sim, Rng& init_rng);

    // scaled actor outputs, always strictly inside (accel, gap) ranges
    std::array<double, 2> continuous_params(const Observation& s) const;

    HybridAction select_action(const Observation& s, double epsilon, Rng& rng) const;

    std::vector<double> double_q_target(const std::vector<Transition>& batch) const;

    struct UpdateStats {
        double critic_loss = 0.0;
        double actor_loss = 0.0;
        bool synced = false;
    };
    // one critic and one actor gradient step on a sampled batch; empty when
    // the replay is below the warm-up threshold
    std::optional<UpdateStats> update(const ReplayBuffer& replay, Rng& rng);

    void sync_targets();

    double epsilon_now(long env_step) const;

    long gradient_steps() const { return gradient_steps_; }

    const Mlp& critic() const { return critic_; }
    const Mlp& actor() const { return actor_; }
    const Mlp& target_critic() const { return target_critic_; }
    const Mlp& target_actor() const { return target_actor_; }
    Mlp& mutable_critic() { return critic_; }
    Mlp& mutable_actor() { return actor_; }

    const RlConfig& rl_config() const { return rl_; }

    void save(std::ostream& os) const;
    static PdqnAgent load(std::istream& is);
    void save_file(const std::string& path) const;
    static PdqnAgent load_file(const std::string& path);

private:
    PdqnAgent() = default;
    std::vector<double> critic_input(const Observation& s,
                                     const std::array<double, 2>& x) const;
    std::array<double, 2> scale_actor_raw(const std::vector<double>& raw,
                                          std::array<double, 2>* tanh_out) const;

    RlConfig rl_;
    double accel_lo_ = -4.5, accel_hi_ = 2.6;
    Mlp critic_, actor_, target_critic_, target_actor_;
    Adam adam_critic_, adam_actor_;
    long gradient_steps_ = 0;

    // scratch buffers reused across updates
    mutable Mlp::Workspace ws_a_, ws_b_;
    std::vector<double> critic_grads_, actor_grads_;
};

}  // namespace zmerge
