#include "cdmarl/inference.hpp"

#include <algorithm>
#include <chrono>
#include <functional>
#include <map>
#include <string>
#include <memory>
#include <cmath>
#include <stdexcept>

namespace cdmarl {

namespace {

inline void escape(double value) {
    // keep the timed call from being optimized away
    asm volatile("" : : "g"(value) : "memory");
}

// Sub-100ns calls need a timer cheaper than clock_gettime; the TSC is read in
// a few ns and calibrated once against the steady clock.
#if defined(__x86_64__) || defined(__i386__)
inline uint64_t timer_ticks() { return __builtin_ia32_rdtsc(); }

double ticks_per_ns() {
    static const double ratio = [] {
        using clock = std::chrono::steady_clock;
        const uint64_t t0 = timer_ticks();
        const auto c0 = clock::now();
        double x = 0.0;
        while (std::chrono::duration_cast<std::chrono::microseconds>(clock::now() - c0)
                   .count() < 20000)
            x += 1e-9; // busy spin
        escape(x);
        const uint64_t t1 = timer_ticks();
        const auto c1 = clock::now();
        const double ns =
            static_cast<double>(std::chrono::duration_cast<std::chrono::nanoseconds>(c1 - c0)
                                    .count());
        return static_cast<double>(t1 - t0) / ns;
    }();
    return ratio;
}

inline double ticks_to_ns(uint64_t ticks) { return static_cast<double>(ticks) / ticks_per_ns(); }
#else
inline uint64_t timer_ticks() {
    return static_cast<uint64_t>(std::chrono::duration_cast<std::chrono::nanoseconds>(
                                     std::chrono::steady_clock::now().time_since_epoch())
                                     .count());
}
inline double ticks_to_ns(uint64_t ticks) { return static_cast<double>(ticks); }
#endif

double percentile(std::vector<double>& sorted, double q) {
    const size_t n = sorted.size();
    const size_t idx = std::min(n - 1, static_cast<size_t>(std::ceil(q * n)) - 1);
    return sorted[idx];
}

LatencyStats summarize(std::vector<double>& samples_ns) {
    std::sort(samples_ns.begin(), samples_ns.end());
    LatencyStats s;
    s.n_runs = static_cast<long>(samples_ns.size());
    s.median_ns = percentile(samples_ns, 0.5);
    s.p99_ns = percentile(samples_ns, 0.99);
    double acc = 0.0;
    for (double v : samples_ns) acc += v;
    s.mean_ns = acc / static_cast<double>(samples_ns.size());
    return s;
}

} // namespace

InferenceEngine InferenceEngine::load(const std::string& path) {
    const LoadedModel model = load_model(path);
    InferenceEngine engine;
    engine.build(model.params, model.bounds);
    return engine;
}

InferenceEngine InferenceEngine::from_model(const nn::MlpParams& params, ActionBounds bounds) {
    params.validate();
    if (!(bounds.p_min < bounds.p_max))
        throw std::invalid_argument("action bounds require p_min < p_max");
    InferenceEngine engine;
    engine.build(params, bounds);
    return engine;
}

void InferenceEngine::build(const nn::MlpParams& params, ActionBounds bounds) {
    bounds_ = bounds;
    size_t total = 0;
    size_t widest = static_cast<size_t>(params.dims.front());
    for (size_t l = 0; l < params.weights.size(); ++l) {
        total += params.weights[l].size() + params.biases[l].size();
        widest = std::max(widest, static_cast<size_t>(params.dims[l + 1]));
    }
    params_.reserve(total);
    for (size_t l = 0; l < params.weights.size(); ++l) {
        Layer layer;
        layer.in = params.dims[l];
        layer.out = params.dims[l + 1];
        layer.act = params.act[l];
        layer.w_off = params_.size();
        params_.insert(params_.end(), params.weights[l].begin(), params.weights[l].end());
        layer.b_off = params_.size();
        params_.insert(params_.end(), params.biases[l].begin(), params.biases[l].end());
        layers_.push_back(layer);
    }
    buf_a_.assign(widest, 0.0);
    buf_b_.assign(widest, 0.0);
}

double InferenceEngine::infer(std::span<const double> input) {
    if (input.size() != static_cast<size_t>(layers_.front().in))
        throw std::invalid_argument("inference input length mismatch");

    double* cur = buf_a_.data();
    double* nxt = buf_b_.data();
    std::copy(input.begin(), input.end(), cur);

    for (const Layer& layer : layers_) {
        const double* w = params_.data() + layer.w_off;
        const double* b = params_.data() + layer.b_off;
        for (int o = 0; o < layer.out; ++o) {
            double acc = b[o];
            const double* row = w + static_cast<size_t>(o) * static_cast<size_t>(layer.in);
            for (int i = 0; i < layer.in; ++i) acc += row[i] * cur[i];
            switch (layer.act) {
                case nn::Act::Relu: nxt[o] = acc > 0.0 ? acc : 0.0; break;
                case nn::Act::Tanh: nxt[o] = std::tanh(acc); break;
                case nn::Act::Identity: nxt[o] = acc; break;
            }
        }
        std::swap(cur, nxt);
    }

    const double u = std::clamp(cur[0], -1.0, 1.0);
    return bounds_.p_min + (u + 1.0) * 0.5 * (bounds_.p_max - bounds_.p_min);
}

namespace {

// Miniature of an interpreted model executor: named tensors that carry their
// shapes, graph nodes dispatched through std::function, parameters marshaled
// into each node. Deliberately heavyweight; this path stands in for running
// the unoptimized training-format model.
struct DynamicTensor {
    std::string name;
    std::vector<int> shape;
    std::vector<double> data;
};

struct DynamicNode {
    std::string name;
    std::string kernel_ref;
    std::string bias_ref;
    std::function<double(double)> activation;
};

double run_dynamic_graph(const nn::MlpParams& params, std::span<const double> input) {
    // "load" the graph: marshal every parameter buffer into named nodes,
    // validating tensors on the way in as interpreters do
    auto checked = [](DynamicTensor t) {
        size_t expect = 1;
        for (int d : t.shape) expect *= static_cast<size_t>(d);
        if (t.data.size() != expect)
            throw std::invalid_argument("tensor " + t.name + " shape/size mismatch");
        for (double v : t.data)
            if (!std::isfinite(v))
                throw std::invalid_argument("tensor " + t.name + " holds a non-finite value");
        return t;
    };

    std::map<std::string, std::unique_ptr<DynamicNode>> graph;
    std::map<std::string, DynamicTensor> session;
    std::vector<std::string> order;
    for (size_t l = 0; l < params.weights.size(); ++l) {
        auto node = std::make_unique<DynamicNode>();
        node->name = "dense_" + std::to_string(l);
        node->kernel_ref = node->name + "/kernel";
        node->bias_ref = node->name + "/bias";
        session.emplace(node->kernel_ref,
                        checked(DynamicTensor{node->kernel_ref,
                                              {params.dims[l + 1], params.dims[l]},
                                              params.weights[l]}));
        session.emplace(node->bias_ref,
                        checked(DynamicTensor{node->bias_ref, {params.dims[l + 1]},
                                              params.biases[l]}));
        switch (params.act[l]) {
            case nn::Act::Relu:
                node->activation = [](double z) { return z > 0.0 ? z : 0.0; };
                break;
            case nn::Act::Tanh:
                node->activation = [](double z) { return std::tanh(z); };
                break;
            case nn::Act::Identity:
                node->activation = [](double z) { return z; };
                break;
        }
        order.push_back(node->name);
        graph.emplace(node->name, std::move(node));
    }

    // feed-dict style session: every op resolves its input and parameter
    // tensors by name and publishes its output back into the store
    session.emplace("input", DynamicTensor{"input", {static_cast<int>(input.size())},
                                           {input.begin(), input.end()}});

    std::string feed = "input";
    for (const std::string& name : order) {
        const auto node_it = graph.find(name);
        if (node_it == graph.end()) throw std::logic_error("missing graph node " + name);
        const DynamicNode& node = *node_it->second;

        const auto in_it = session.find(feed);
        if (in_it == session.end()) throw std::logic_error("missing tensor " + feed);
        const DynamicTensor& x = in_it->second;
        const auto kernel_it = session.find(node.kernel_ref);
        const auto bias_it = session.find(node.bias_ref);
        if (kernel_it == session.end() || bias_it == session.end())
            throw std::logic_error("missing parameter tensors for " + name);
        const DynamicTensor& kernel = kernel_it->second;
        const DynamicTensor& bias = bias_it->second;

        const int in = kernel.shape[1];
        const int out = kernel.shape[0];
        if (x.shape.size() != 1 || x.shape[0] != in)
            throw std::invalid_argument("tensor shape mismatch at " + name);

        DynamicTensor y{name + "/out", {out}, std::vector<double>(static_cast<size_t>(out))};
        for (int o = 0; o < out; ++o) {
            double acc = bias.data[static_cast<size_t>(o)];
            for (int i = 0; i < in; ++i)
                acc += kernel.data[static_cast<size_t>(o * in + i)] *
                       x.data[static_cast<size_t>(i)];
            y.data[static_cast<size_t>(o)] = node.activation(acc);
        }
        feed = y.name;
        session.emplace(feed, std::move(y));
    }

    const auto out_it = session.find(feed);
    if (out_it == session.end()) throw std::logic_error("missing output tensor");
    return out_it->second.data[0];
}

} // namespace

double naive_infer(const nn::MlpParams& params, ActionBounds bounds,
                   std::span<const double> input) {
    const double u = std::clamp(run_dynamic_graph(params, input), -1.0, 1.0);
    return bounds.p_min + (u + 1.0) * 0.5 * (bounds.p_max - bounds.p_min);
}

LatencyStats bench_latency(InferenceEngine& engine, long n_runs,
                           std::span<const double> input) {
    if (n_runs < 1000) throw std::invalid_argument("latency benchmark needs n_runs >= 1000");
    ticks_to_ns(1); // calibrate before the timed region

    const long warmup = std::min<long>(n_runs / 10, 2000);
    for (long i = 0; i < warmup; ++i) escape(engine.infer(input));

    std::vector<double> samples(static_cast<size_t>(n_runs));
    for (long i = 0; i < n_runs; ++i) {
        const uint64_t t0 = timer_ticks();
        escape(engine.infer(input));
        const uint64_t t1 = timer_ticks();
        samples[static_cast<size_t>(i)] = ticks_to_ns(t1 - t0);
    }
    return summarize(samples);
}

LatencyStats bench_naive(const nn::MlpParams& params, ActionBounds bounds, long n_runs,
                         std::span<const double> input) {
    if (n_runs < 1000) throw std::invalid_argument("latency benchmark needs n_runs >= 1000");
    ticks_to_ns(1); // calibrate before the timed region

    const long warmup = std::min<long>(n_runs / 10, 2000);
    for (long i = 0; i < warmup; ++i) escape(naive_infer(params, bounds, input));

    std::vector<double> samples(static_cast<size_t>(n_runs));
    for (long i = 0; i < n_runs; ++i) {
        const uint64_t t0 = timer_ticks();
        escape(naive_infer(params, bounds, input));
        const uint64_t t1 = timer_ticks();
        samples[static_cast<size_t>(i)] = ticks_to_ns(t1 - t0);
    }
    return summarize(samples);
}

} // namespace cdmarl
