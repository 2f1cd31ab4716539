#include "zmerge/neural.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace zmerge {

namespace {

void write_pod(std::ostream& os, const void* p, std::size_t n) {
    os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

void read_pod(std::istream& is, void* p, std::size_t n) {
    is.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (!is) throw std::runtime_error("neural: truncated stream");
}

template <typename T>
void write_vec(std::ostream& os, const std::vector<T>& v) {
    const std::uint64_t n = v.size();
    write_pod(os, &n, sizeof n);
    if (n) write_pod(os, v.data(), n * sizeof(T));
}

template <typename T>
std::vector<T> read_vec(std::istream& is) {
    std::uint64_t n = 0;
    read_pod(is, &n, sizeof n);
    std::vector<T> v(n);
    if (n) read_pod(is, v.data(), n * sizeof(T));
    return v;
}

}  // namespace

std::size_t Mlp::layer_offset(int layer) const {
    std::size_t off = 0;
    for (int l = 0; l < layer; ++l) {
        off += static_cast<std::size_t>(dims_[l + 1]) * dims_[l] + dims_[l + 1];
    }
    return off;
}

Mlp Mlp::create(const std::vector<int>& dims, Rng& rng) {
    if (dims.size() < 2) throw std::invalid_argument("mlp: need at least two dims");
    for (int d : dims) {
        if (d <= 0) throw std::invalid_argument("mlp: non-positive layer width");
    }
    Mlp net;
    net.dims_ = dims;
    std::size_t total = 0;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        total += static_cast<std::size_t>(dims[l + 1]) * dims[l] + dims[l + 1];
    }
    net.params_.resize(total);
    const int n_layers = static_cast<int>(dims.size()) - 1;
    for (int l = 0; l < n_layers; ++l) {
        const int fan_in = dims[static_cast<size_t>(l)];
        const int fan_out = dims[static_cast<size_t>(l) + 1];
        const bool output_layer = l == n_layers - 1;
        // He-uniform on ReLU layers, small uniform on the linear output
        const double limit = output_layer ? 3e-3 : std::sqrt(6.0 / fan_in);
        double* w = net.params_.data() + net.layer_offset(l);
        for (int i = 0; i < fan_out * fan_in; ++i) w[i] = rng.uniform(-limit, limit);
        double* b = w + fan_out * fan_in;
        for (int i = 0; i < fan_out; ++i) b[i] = 0.0;
    }
    return net;
}

std::vector<double> Mlp::forward(const std::vector<double>& x) const {
    if (static_cast<int>(x.size()) != input_dim()) {
        throw std::invalid_argument("mlp: input width mismatch");
    }
    std::vector<double> cur = x, next;
    const int n_layers = static_cast<int>(dims_.size()) - 1;
    for (int l = 0; l < n_layers; ++l) {
        const int in = dims_[static_cast<size_t>(l)];
        const int out = dims_[static_cast<size_t>(l) + 1];
        const double* w = params_.data() + layer_offset(l);
        const double* b = w + static_cast<std::size_t>(out) * in;
        next.assign(static_cast<size_t>(out), 0.0);
        for (int o = 0; o < out; ++o) {
            const double* row = w + static_cast<std::size_t>(o) * in;
            double acc = b[o];
            for (int i = 0; i < in; ++i) acc += row[i] * cur[static_cast<size_t>(i)];
            next[static_cast<size_t>(o)] = (l + 1 < n_layers && acc < 0.0) ? 0.0 : acc;
        }
        cur.swap(next);
    }
    return cur;
}

void Mlp::forward_cached(const std::vector<double>& x, Workspace& ws) const {
    if (static_cast<int>(x.size()) != input_dim()) {
        throw std::invalid_argument("mlp: input width mismatch");
    }
    const int n_layers = static_cast<int>(dims_.size()) - 1;
    ws.layer_in.resize(static_cast<size_t>(n_layers));
    ws.layer_in[0] = x;
    for (int l = 0; l < n_layers; ++l) {
        const int in = dims_[static_cast<size_t>(l)];
        const int out = dims_[static_cast<size_t>(l) + 1];
        const double* w = params_.data() + layer_offset(l);
        const double* b = w + static_cast<std::size_t>(out) * in;
        const std::vector<double>& src = ws.layer_in[static_cast<size_t>(l)];
        std::vector<double>& dst =
            (l + 1 < n_layers) ? ws.layer_in[static_cast<size_t>(l) + 1] : ws.out;
        dst.assign(static_cast<size_t>(out), 0.0);
        for (int o = 0; o < out; ++o) {
            const double* row = w + static_cast<std::size_t>(o) * in;
            double acc = b[o];
            for (int i = 0; i < in; ++i) acc += row[i] * src[static_cast<size_t>(i)];
            dst[static_cast<size_t>(o)] = (l + 1 < n_layers && acc < 0.0) ? 0.0 : acc;
        }
    }
}

void Mlp::backward(const Workspace& ws, const std::vector<double>& upstream,
                   std::vector<double>* grads, std::vector<double>* input_grad) const {
    const int n_layers = static_cast<int>(dims_.size()) - 1;
    if (static_cast<int>(upstream.size()) != output_dim()) {
        throw std::invalid_argument("mlp: upstream width mismatch");
    }
    if (grads && grads->size() != params_.size()) {
        throw std::invalid_argument("mlp: gradient buffer shape mismatch");
    }
    std::vector<double> delta = upstream, prev_delta;
    for (int l = n_layers - 1; l >= 0; --l) {
        const int in = dims_[static_cast<size_t>(l)];
        const int out = dims_[static_cast<size_t>(l) + 1];
        const double* w = params_.data() + layer_offset(l);
        double* gw = grads ? grads->data() + layer_offset(l) : nullptr;
        double* gb = gw ? gw + static_cast<std::size_t>(out) * in : nullptr;
        const std::vector<double>& src = ws.layer_in[static_cast<size_t>(l)];
        // ReLU mask on hidden outputs: recomputed from the next layer's input
        if (l + 1 < n_layers) {
            const std::vector<double>& act = ws.layer_in[static_cast<size_t>(l) + 1];
            for (int o = 0; o < out; ++o) {
                if (act[static_cast<size_t>(o)] <= 0.0) delta[static_cast<size_t>(o)] = 0.0;
            }
        }
        prev_delta.assign(static_cast<size_t>(in), 0.0);
        for (int o = 0; o < out; ++o) {
            const double d = delta[static_cast<size_t>(o)];
            if (gb) gb[o] += d;
            if (d == 0.0) continue;
            const double* row = w + static_cast<std::size_t>(o) * in;
            for (int i = 0; i < in; ++i) {
                prev_delta[static_cast<size_t>(i)] += d * row[i];
            }
            if (gw) {
                double* grow = gw + static_cast<std::size_t>(o) * in;
                for (int i = 0; i < in; ++i) {
                    grow[i] += d * src[static_cast<size_t>(i)];
                }
            }
        }
        delta.swap(prev_delta);
    }
    if (input_grad) *input_grad = delta;
}

void Mlp::save(std::ostream& os) const {
    const std::uint64_t n_dims = dims_.size();
    write_pod(os, &n_dims, sizeof n_dims);
    for (int d : dims_) {
        const std::int64_t v = d;
        write_pod(os, &v, sizeof v);
    }
    write_vec(os, params_);
}

Mlp Mlp::load(std::istream& is) {
    std::uint64_t n_dims = 0;
    read_pod(is, &n_dims, sizeof n_dims);
    Mlp net;
    net.dims_.resize(n_dims);
    for (auto& d : net.dims_) {
        std::int64_t v = 0;
        read_pod(is, &v, sizeof v);
        d = static_cast<int>(v);
    }
    net.params_ = read_vec<double>(is);
    return net;
}

Adam::Adam(std::size_t n, double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), m_(n, 0.0), v_(n, 0.0) {}

void Adam::step(std::vector<double>& params, const std::vector<double>& grads) {
    if (params.size() != m_.size() || grads.size() != m_.size()) {
        throw std::invalid_argument("adam: shape mismatch");
    }
    for (double g : grads) {
        if (!std::isfinite(g)) throw std::runtime_error("adam: non-finite gradient");
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    for (std::size_t i = 0; i < params.size(); ++i) {
        m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grads[i];
        v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grads[i] * grads[i];
        const double mhat = m_[i] / bc1;
        const double vhat = v_[i] / bc2;
        params[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
}

void Adam::save(std::ostream& os) const {
    write_pod(os, &lr_, sizeof lr_);
    write_pod(os, &beta1_, sizeof beta1_);
    write_pod(os, &beta2_, sizeof beta2_);
    write_pod(os, &eps_, sizeof eps_);
    const std::int64_t t = t_;
    write_pod(os, &t, sizeof t);
    write_vec(os, m_);
    write_vec(os, v_);
}

Adam Adam::load(std::istream& is) {
    Adam a;
    read_pod(is, &a.lr_, sizeof a.lr_);
    read_pod(is, &a.beta1_, sizeof a.beta1_);
    read_pod(is, &a.beta2_, sizeof a.beta2_);
    read_pod(is, &a.eps_, sizeof a.eps_);
    std::int64_t t = 0;
    read_pod(is, &t, sizeof t);
    a.t_ = t;
    a.m_ = read_vec<double>(is);
    a.v_ = read_vec<double>(is);
    return a;
}

void clip_grad_norm(std::vector<double>& grads, double max_norm) {
    double sq = 0.0;
    for (double g : grads) sq += g * g;
    const double norm = std::sqrt(sq);
    if (norm <= max_norm || norm == 0.0) return;
    const double scale = max_norm / norm;
    for (double& g : grads) g *= scale;
}

}  // namespace zmerge
