#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cdmarl/rng.hpp"

namespace cdmarl::nn {

enum class Act : uint8_t { Relu = 0, Tanh = 1, Identity = 2 };

// Dense feed-forward network parameters. weights[l] is the [dims[l+1] x
// dims[l]] matrix in row-major order, biases[l] has dims[l+1] entries and
// act[l] is applied after the affine map of layer l.
struct MlpParams {
    std::vector<int> dims;
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;
    std::vector<Act> act;

    int n_layers() const { return static_cast<int>(weights.size()); }
    int input_dim() const { return dims.empty() ? 0 : dims.front(); }
    int output_dim() const { return dims.empty() ? 0 : dims.back(); }

    void validate() const; // throws std::invalid_argument on shape mismatch
};

// Uniform init in +-1/sqrt(fan_in) for weights and biases, drawn layer by
// layer (weights row-major, then biases).
MlpParams make_mlp(std::span<const int> dims, std::span<const Act> act, Rng& rng);
MlpParams make_zero_mlp(std::span<const int> dims, std::span<const Act> act);

// Gradients of a scalar objective w.r.t. every parameter, plus the gradient
// w.r.t. the network input (needed to differentiate a critic through its
// action input).
struct Gradients {
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;
    std::vector<double> input;
};

Gradients make_gradients(const MlpParams& p);
void zero(Gradients& g);
void scale(Gradients& g, double factor);

// Pre-activations and activations kept from a forward pass so the backward
// pass can be exact. activations[0] is the input copy.
struct ForwardTrace {
    std::vector<std::vector<double>> pre;
    std::vector<std::vector<double>> activations;
    const std::vector<double>& output() const { return activations.back(); }
};

// Plain forward pass. Rejects non-finite inputs and shape mismatches.
std::vector<double> forward(const MlpParams& p, std::span<const double> input);

// Forward pass that records the trace; reuses the buffers already in `trace`.
void forward_trace(const MlpParams& p, std::span<const double> input, ForwardTrace& trace);

// Reverse-mode gradients of dot(output, upstream) w.r.t. all parameters and
// the input. Accumulates into `out` when accumulate is true.
void backward(const MlpParams& p, const ForwardTrace& trace, std::span<const double> upstream,
              Gradients& out, bool accumulate = false);

struct AdamState {
    std::vector<std::vector<double>> m_w, v_w, m_b, v_b;
    long t = 0;
};

AdamState make_adam_state(const MlpParams& p);

// Adaptive-moment update with bias correction, with optional decoupled L2
// weight decay. Non-finite gradients raise std::runtime_error so a diverging
// run stops instead of poisoning the parameters.
void adam_step(MlpParams& p, const Gradients& g, AdamState& state, double lr,
               double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8,
               double weight_decay = 0.0);

// target <- tau * online + (1 - tau) * target, elementwise.
void soft_update(MlpParams& target, const MlpParams& online, double tau);

} // namespace cdmarl::nn
