#pragma once

#include <span>
#include <string>
#include <vector>

#include "cdmarl/model_io.hpp"

namespace cdmarl {

// Deployment-side runtime: one contiguous parameter buffer with precomputed
// layer offsets and fixed scratch space, so a call to infer never allocates.
class InferenceEngine {
  public:
    static InferenceEngine load(const std::string& path);
    static InferenceEngine from_model(const nn::MlpParams& params, ActionBounds bounds);

    // Observation vector in, transmit power (mW) out. Same math as the
    // agent's noise-free action: network output through the affine map onto
    // [p_min, p_max].
    double infer(std::span<const double> input);

    int input_dim() const { return layers_.front().in; }
    const ActionBounds& bounds() const { return bounds_; }

  private:
    struct Layer {
        int in = 0;
        int out = 0;
        size_t w_off = 0;
        size_t b_off = 0;
        nn::Act act = nn::Act::Identity;
    };

    InferenceEngine() = default;
    void build(const nn::MlpParams& params, ActionBounds bounds);

    std::vector<double> params_;
    std::vector<Layer> layers_;
    std::vector<double> buf_a_, buf_b_;
    ActionBounds bounds_;
};

struct LatencyStats {
    double median_ns = 0.0;
    double mean_ns = 0.0;
    double p99_ns = 0.0;
    long n_runs = 0;
};

// Times n_runs single-inference calls on a fixed input after a warmup pass.
// n_runs must be >= 1000 for the percentiles to mean anything.
LatencyStats bench_latency(InferenceEngine& engine, long n_runs,
                           std::span<const double> input);

// Unoptimized reference path: runs the training-side forward (which allocates
// its trace buffers on every call) plus the bound mapping. Exists so latency
// reports can show the optimized/naive ordering.
double naive_infer(const nn::MlpParams& params, ActionBounds bounds,
                   std::span<const double> input);

LatencyStats bench_naive(const nn::MlpParams& params, ActionBounds bounds, long n_runs,
                         std::span<const double> input);

} // namespace cdmarl
