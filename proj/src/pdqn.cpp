#include "zmerge/pdqn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace zmerge {

namespace {

constexpr char kCheckpointMagic[4] = {'Z', 'M', 'C', 'K'};
constexpr std::uint32_t kCheckpointVersion = 1;

double huber(double e, double delta) {
    const double a = std::abs(e);
    return a <= delta ? 0.5 * e * e : delta * (a - 0.5 * delta);
}

double huber_grad(double e, double delta) { return std::clamp(e, -delta, delta); }

int argmax_lowest(const std::vector<double>& q) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(q.size()); ++i) {
        if (q[static_cast<size_t>(i)] > q[static_cast<size_t>(best)]) best = i;
    }
    return best;
}

}  // namespace

void ReplayBuffer::push(const Transition& t) {
    if (data_.size() < capacity_) {
        data_.push_back(t);
    } else {
        data_[head_] = t;
        head_ = (head_ + 1) % capacity_;
    }
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t n, Rng& rng) const {
    std::vector<std::size_t> out;
    out.reserve(n);
    // Floyd's sampling; n <= size is the caller's contract
    for (std::size_t j = size() - n; j < size(); ++j) {
        const std::size_t t = rng.uniform_index(j + 1);
        if (std::find(out.begin(), out.end(), t) == out.end()) {
            out.push_back(t);
        } else {
            out.push_back(j);
        }
    }
    return out;
}

PdqnAgent::PdqnAgent(const RlConfig& rl, const SimConfig& sim, Rng& init_rng) : rl_(rl) {
    accel_lo_ = sim.accel_min;
    accel_hi_ = sim.accel_max_cmd;
    std::vector<int> critic_dims{kObsDim + 2};
    std::vector<int> actor_dims{kObsDim};
    for (int h : rl.hidden) {
        critic_dims.push_back(h);
        actor_dims.push_back(h);
    }
    critic_dims.push_back(kNumActions);
    actor_dims.push_back(2);
    critic_ = Mlp::create(critic_dims, init_rng);
    actor_ = Mlp::create(actor_dims, init_rng);
    target_critic_ = critic_;
    target_actor_ = actor_;
    adam_critic_ = Adam(critic_.parameter_count(), rl.lr_critic);
    adam_actor_ = Adam(actor_.parameter_count(), rl.lr_actor);
    critic_grads_.resize(critic_.parameter_count());
    actor_grads_.resize(actor_.parameter_count());
}

std::array<double, 2> PdqnAgent::scale_actor_raw(const std::vector<double>& raw,
                                                 std::array<double, 2>* tanh_out) const {
    const double t0 = std::tanh(raw[0]);
    const double t1 = std::tanh(raw[1]);
    if (tanh_out) *tanh_out = {t0, t1};
    const double accel_mid = 0.5 * (accel_lo_ + accel_hi_);
    const double accel_half = 0.5 * (accel_hi_ - accel_lo_);
    const double gap_mid = 0.5 * (kGapMin + kGapMax);
    const double gap_half = 0.5 * (kGapMax - kGapMin);
    return {accel_mid + accel_half * t0, gap_mid + gap_half * t1};
}

std::array<double, 2> PdqnAgent::continuous_params(const Observation& s) const {
    const auto raw = actor_.forward(std::vector<double>(s.begin(), s.end()));
    return scale_actor_raw(raw, nullptr);
}

std::vector<double> PdqnAgent::critic_input(const Observation& s,
                                            const std::array<double, 2>& x) const {
    std::vector<double> in(s.begin(), s.end());
    in.push_back(x[0]);
    in.push_back(x[1]);
    return in;
}

HybridAction PdqnAgent::select_action(const Observation& s, double epsilon,
                                      Rng& rng) const {
    if (rng.uniform() < epsilon) {
        const int k = static_cast<int>(rng.uniform_index(kNumActions));
        HybridAction a{k, std::nullopt};
        if (k == kActAccel) a.x = rng.uniform(accel_lo_, accel_hi_);
        if (k == kActGap) a.x = rng.uniform(kGapMin, kGapMax);
        return a;
    }
    const auto x = continuous_params(s);
    const auto q = critic_.forward(critic_input(s, x));
    const int k = argmax_lowest(q);
    HybridAction a{k, std::nullopt};
    if (k == kActAccel) a.x = x[0];
    if (k == kActGap) a.x = x[1];
    return a;
}

std::vector<double> PdqnAgent::double_q_target(const std::vector<Transition>& batch) const {
    std::vector<double> y(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const Transition& t = batch[i];
        if (t.terminal) {
            y[i] = t.r;
            continue;
        }
        // select with the online networks, evaluate with the targets
        const auto x_online = continuous_params(t.s_next);
        const auto q_online = critic_.forward(critic_input(t.s_next, x_online));
        const int k_star = argmax_lowest(q_online);

        const auto raw_t =
            target_actor_.forward(std::vector<double>(t.s_next.begin(), t.s_next.end()));
        const auto x_target = scale_actor_raw(raw_t, nullptr);
        const auto q_target = target_critic_.forward(critic_input(t.s_next, x_target));
        y[i] = t.r + rl_.gamma * q_target[static_cast<size_t>(k_star)];
    }
    return y;
}

std::optional<PdqnAgent::UpdateStats> PdqnAgent::update(const ReplayBuffer& replay,
                                                        Rng& rng) {
    if (replay.size() < static_cast<std::size_t>(rl_.warmup_transitions) ||
        replay.size() < static_cast<std::size_t>(rl_.batch_size)) {
        return std::nullopt;
    }
    const auto idx = replay.sample_indices(static_cast<std::size_t>(rl_.batch_size), rng);
    std::vector<Transition> batch;
    batch.reserve(idx.size());
    for (auto i : idx) batch.push_back(replay.at(i));

    const auto y = double_q_target(batch);
    const double inv_b = 1.0 / static_cast<double>(batch.size());

    // critic step: Huber TD error on the recorded action's head. The stored
    // continuous argument sits in its own slot; the other slot takes the
    // current actor output.
    UpdateStats stats;
    std::fill(critic_grads_.begin(), critic_grads_.end(), 0.0);
    std::vector<double> upstream(kNumActions, 0.0);
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const Transition& t = batch[i];
        auto x = continuous_params(t.s);
        if (t.has_x) {
            if (t.k == kActAccel) x[0] = t.x_k;
            if (t.k == kActGap) x[1] = t.x_k;
        }
        critic_.forward_cached(critic_input(t.s, x), ws_a_);
        const double e = ws_a_.out[static_cast<size_t>(t.k)] - y[i];
        stats.critic_loss += huber(e, rl_.huber_delta) * inv_b;
        std::fill(upstream.begin(), upstream.end(), 0.0);
        upstream[static_cast<size_t>(t.k)] = huber_grad(e, rl_.huber_delta) * inv_b;
        critic_.backward(ws_a_, upstream, &critic_grads_, nullptr);
    }
    clip_grad_norm(critic_grads_, rl_.grad_clip);
    adam_critic_.step(critic_.parameters(), critic_grads_);

    // actor step: maximize the summed Q over heads, gradient through the
    // continuous input slots only
    std::fill(actor_grads_.begin(), actor_grads_.end(), 0.0);
    std::vector<double> input_grad;
    const double accel_half = 0.5 * (accel_hi_ - accel_lo_);
    const double gap_half = 0.5 * (kGapMax - kGapMin);
    for (const auto& t : batch) {
        actor_.forward_cached(std::vector<double>(t.s.begin(), t.s.end()), ws_a_);
        std::array<double, 2> tanh_raw;
        const auto x = scale_actor_raw(ws_a_.out, &tanh_raw);
        critic_.forward_cached(critic_input(t.s, x), ws_b_);
        for (double q : ws_b_.out) stats.actor_loss -= q * inv_b;
        std::vector<double> q_upstream(kNumActions, -inv_b);
        critic_.backward(ws_b_, q_upstream, nullptr, &input_grad);
        const std::vector<double> raw_upstream = {
            input_grad[kObsDim] * accel_half * (1.0 - tanh_raw[0] * tanh_raw[0]),
            input_grad[kObsDim + 1] * gap_half * (1.0 - tanh_raw[1] * tanh_raw[1])};
        actor_.backward(ws_a_, raw_upstream, &actor_grads_, nullptr);
    }
    clip_grad_norm(actor_grads_, rl_.grad_clip);
    adam_actor_.step(actor_.parameters(), actor_grads_);

    ++gradient_steps_;
    if (gradient_steps_ % rl_.sync_period == 0) {
        sync_targets();
        stats.synced = true;
    }
    return stats;
}

void PdqnAgent::sync_targets() {
    target_critic_ = critic_;
    target_actor_ = actor_;
}

double PdqnAgent::epsilon_now(long env_step) const {
    return std::max(rl_.eps_final,
                    rl_.eps_init * std::pow(rl_.eps_decay, static_cast<double>(env_step)));
}

void PdqnAgent::save(std::ostream& os) const {
    os.write(kCheckpointMagic, sizeof kCheckpointMagic);
    const std::uint32_t version = kCheckpointVersion;
    os.write(reinterpret_cast<const char*>(&version), sizeof version);
    os.write(reinterpret_cast<const char*>(&accel_lo_), sizeof accel_lo_);
    os.write(reinterpret_cast<const char*>(&accel_hi_), sizeof accel_hi_);
    critic_.save(os);
    actor_.save(os);
    target_critic_.save(os);
    target_actor_.save(os);
    adam_critic_.save(os);
    adam_actor_.save(os);
    const std::int64_t gs = gradient_steps_;
    os.write(reinterpret_cast<const char*>(&gs), sizeof gs);
    // learner hyperparameters needed to resume consistently
    os.write(reinterpret_cast<const char*>(&rl_.gamma), sizeof rl_.gamma);
    os.write(reinterpret_cast<const char*>(&rl_.huber_delta), sizeof rl_.huber_delta);
}

PdqnAgent PdqnAgent::load(std::istream& is) {
    char magic[4];
    is.read(magic, sizeof magic);
    if (!is || std::string(magic, 4) != std::string(kCheckpointMagic, 4)) {
        throw std::runtime_error("checkpoint: bad magic");
    }
    std::uint32_t version = 0;
    is.read(reinterpret_cast<char*>(&version), sizeof version);
    if (version != kCheckpointVersion) {
        throw std::runtime_error("checkpoint: unsupported version");
    }
    PdqnAgent a;
    is.read(reinterpret_cast<char*>(&a.accel_lo_), sizeof a.accel_lo_);
    is.read(reinterpret_cast<char*>(&a.accel_hi_), sizeof a.accel_hi_);
    a.critic_ = Mlp::load(is);
    a.actor_ = Mlp::load(is);
    a.target_critic_ = Mlp::load(is);
    a.target_actor_ = Mlp::load(is);
    a.adam_critic_ = Adam::load(is);
    a.adam_actor_ = Adam::load(is);
    std::int64_t gs = 0;
    is.read(reinterpret_cast<char*>(&gs), sizeof gs);
    a.gradient_steps_ = gs;
    is.read(reinterpret_cast<char*>(&a.rl_.gamma), sizeof a.rl_.gamma);
    is.read(reinterpret_cast<char*>(&a.rl_.huber_delta), sizeof a.rl_.huber_delta);
    if (!is) throw std::runtime_error("checkpoint: truncated");
    a.critic_grads_.resize(a.critic_.parameter_count());
    a.actor_grads_.resize(a.actor_.parameter_count());
    return a;
}

void PdqnAgent::save_file(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("checkpoint: cannot open " + path);
    save(os);
}

PdqnAgent PdqnAgent::load_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("checkpoint: cannot open " + path);
    return load(is);
}

}  // namespace zmerge
