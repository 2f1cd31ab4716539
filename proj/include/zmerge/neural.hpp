#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "zmerge/rng.hpp"

namespace zmerge {

// Dense ReLU network, double precision, row-major weights. Hidden layers use
// ReLU, the output layer is linear.
class Mlp {
public:
    Mlp() = default;
    // dims = {input, hidden..., output}
    static Mlp create(const std::vector<int>& dims, Rng& rng);

    int input_dim() const { return dims_.front(); }
    int output_dim() const { return dims_.back(); }
    const std::vector<int>& dims() const { return dims_; }

    std::vector<double> forward(const std::vector<double>& x) const;

    // forward that keeps layer inputs for a following backward()
    struct Workspace {
        std::vector<std::vector<double>> layer_in;  // input to each layer
        std::vector<double> out;
    };
    void forward_cached(const std::vector<double>& x, Workspace& ws) const;

    // gradients of sum(upstream . output) w.r.t. parameters and the input;
    // accumulates into *grads (same shape as parameters()); either output
    // may be null to skip it
    void backward(const Workspace& ws, const std::vector<double>& upstream,
                  std::vector<double>* grads, std::vector<double>* input_grad) const;

    std::vector<double>& parameters() { return params_; }
    const std::vector<double>& parameters() const { return params_; }
    std::size_t parameter_count() const { return params_.size(); }

    void save(std::ostream& os) const;
    static Mlp load(std::istream& is);

    bool operator==(const Mlp& other) const {
        return dims_ == other.dims_ && params_ == other.params_;
    }

private:
    // layer l: weights dims_[l+1] x dims_[l], then bias dims_[l+1]
    std::size_t layer_offset(int layer) const;
    std::vector<int> dims_;
    std::vector<double> params_;
};

// Bias-corrected Adam over a flat parameter vector.
class Adam {
public:
    Adam() = default;
    Adam(std::size_t n, double lr, double beta1 = 0.9, double beta2 = 0.999,
         double eps = 1e-8);

    // applies one update in place; throws on non-finite gradients
    void step(std::vector<double>& params, const std::vector<double>& grads);

    long steps_taken() const { return t_; }

    void save(std::ostream& os) const;
    static Adam load(std::istream& is);
    bool operator==(const Adam& other) const = default;

private:
    double lr_ = 1e-4, beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
    long t_ = 0;
    std::vector<double> m_, v_;
};

// scales grads in place so the global L2 norm is at most max_norm
void clip_grad_norm(std::vector<double>& grads, double max_norm);

}  // namespace zmerge
