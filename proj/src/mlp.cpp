#include "cdmarl/mlp.hpp"

#include <cmath>
#include <stdexcept>

namespace cdmarl::nn {

namespace {

double activate(Act a, double z) {
    switch (a) {
        case Act::Relu: return z > 0.0 ? z : 0.0;
        case Act::Tanh: return std::tanh(z);
        case Act::Identity: return z;
    }
    return z;
}

// derivative expressed through pre-activation z and activation y
double activate_grad(Act a, double z, double y) {
    switch (a) {
        case Act::Relu: return z > 0.0 ? 1.0 : 0.0;
        case Act::Tanh: return 1.0 - y * y;
        case Act::Identity: return 1.0;
    }
    return 1.0;
}

void check_shapes(const MlpParams& p) { p.validate(); }

} // namespace

void MlpParams::validate() const {
    if (dims.size() < 2) throw std::invalid_argument("mlp needs at least input and output dims");
    const size_t n = dims.size() - 1;
    if (weights.size() != n || biases.size() != n || act.size() != n)
        throw std::invalid_argument("mlp layer count mismatch");
    for (size_t l = 0; l < n; ++l) {
        if (dims[l] < 1 || dims[l + 1] < 1)
            throw std::invalid_argument("mlp layer dims must be >= 1");
        const size_t in = static_cast<size_t>(dims[l]);
        const size_t out = static_cast<size_t>(dims[l + 1]);
        if (weights[l].size() != in * out)
            throw std::invalid_argument("weight matrix shape mismatch at layer " +
                                        std::to_string(l));
        if (biases[l].size() != out)
            throw std::invalid_argument("bias shape mismatch at layer " + std::to_string(l));
    }
}

MlpParams make_zero_mlp(std::span<const int> dims, std::span<const Act> act) {
    if (dims.size() < 2 || act.size() != dims.size() - 1)
        throw std::invalid_argument("mlp needs dims >= 2 and one activation per layer");
    MlpParams p;
    p.dims.assign(dims.begin(), dims.end());
    p.act.assign(act.begin(), act.end());
    for (size_t l = 0; l + 1 < dims.size(); ++l) {
        p.weights.emplace_back(static_cast<size_t>(dims[l]) * static_cast<size_t>(dims[l + 1]),
                               0.0);
        p.biases.emplace_back(static_cast<size_t>(dims[l + 1]), 0.0);
    }
    p.validate();
    return p;
}

MlpParams make_mlp(std::span<const int> dims, std::span<const Act> act, Rng& rng) {
    MlpParams p = make_zero_mlp(dims, act);
    for (size_t l = 0; l < p.weights.size(); ++l) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(p.dims[l]));
        for (auto& w : p.weights[l]) w = rng.uniform(-bound, bound);
        for (auto& b : p.biases[l]) b = rng.uniform(-bound, bound);
    }
    return p;
}

Gradients make_gradients(const MlpParams& p) {
    Gradients g;
    for (size_t l = 0; l < p.weights.size(); ++l) {
        g.weights.emplace_back(p.weights[l].size(), 0.0);
        g.biases.emplace_back(p.biases[l].size(), 0.0);
    }
    g.input.assign(static_cast<size_t>(p.input_dim()), 0.0);
    return g;
}

void zero(Gradients& g) {
    for (auto& w : g.weights) std::fill(w.begin(), w.end(), 0.0);
    for (auto& b : g.biases) std::fill(b.begin(), b.end(), 0.0);
    std::fill(g.input.begin(), g.input.end(), 0.0);
}

void scale(Gradients& g, double factor) {
    for (auto& w : g.weights)
        for (auto& x : w) x *= factor;
    for (auto& b : g.biases)
        for (auto& x : b) x *= factor;
    for (auto& x : g.input) x *= factor;
}

void forward_trace(const MlpParams& p, std::span<const double> input, ForwardTrace& trace) {
    check_shapes(p);
    if (input.size() != static_cast<size_t>(p.input_dim()))
        throw std::invalid_argument("input length " + std::to_string(input.size()) +
                                    " does not match mlp input dim " +
                                    std::to_string(p.input_dim()));
    for (double x : input)
        if (!std::isfinite(x)) throw std::invalid_argument("non-finite input to mlp");

    const size_t n = p.weights.size();
    trace.pre.resize(n);
    trace.activations.resize(n + 1);
    trace.activations[0].assign(input.begin(), input.end());

    for (size_t l = 0; l < n; ++l) {
        const size_t in = static_cast<size_t>(p.dims[l]);
        const size_t out = static_cast<size_t>(p.dims[l + 1]);
        const auto& x = trace.activations[l];
        auto& z = trace.pre[l];
        auto& y = trace.activations[l + 1];
        z.resize(out);
        y.resize(out);
        const double* w = p.weights[l].data();
        for (size_t o = 0; o < out; ++o) {
            double acc = p.biases[l][o];
            const double* row = w + o * in;
            for (size_t i = 0; i < in; ++i) acc += row[i] * x[i];
            z[o] = acc;
            y[o] = activate(p.act[l], acc);
        }
    }
}

std::vector<double> forward(const MlpParams& p, std::span<const double> input) {
    ForwardTrace trace;
    forward_trace(p, input, trace);
    return trace.activations.back();
}

void backward(const MlpParams& p, const ForwardTrace& trace, std::span<const double> upstream,
              Gradients& out, bool accumulate) {
    check_shapes(p);
    const size_t n = p.weights.size();
    if (trace.activations.size() != n + 1 || trace.pre.size() != n)
        throw std::invalid_argument("forward trace does not match mlp");
    if (upstream.size() != static_cast<size_t>(p.output_dim()))
        throw std::invalid_argument("upstream gradient length mismatch");

    if (out.weights.size() != n) out = make_gradients(p);
    if (!accumulate) zero(out);

    std::vector<double> delta(upstream.begin(), upstream.end());
    std::vector<double> next_delta;

    for (size_t l = n; l-- > 0;) {
        const size_t in = static_cast<size_t>(p.dims[l]);
        const size_t out_dim = static_cast<size_t>(p.dims[l + 1]);
        const auto& z = trace.pre[l];
        const auto& y = trace.activations[l + 1];
        const auto& x = trace.activations[l];

        for (size_t o = 0; o < out_dim; ++o) delta[o] *= activate_grad(p.act[l], z[o], y[o]);

        double* gw = out.weights[l].data();
        for (size_t o = 0; o < out_dim; ++o) {
            const double d = delta[o];
            out.biases[l][o] += d;
            double* row = gw + o * in;
            for (size_t i = 0; i < in; ++i) row[i] += d * x[i];
        }

        next_delta.assign(in, 0.0);
        const double* w = p.weights[l].data();
        for (size_t o = 0; o < out_dim; ++o) {
            const double d = delta[o];
            const double* row = w + o * in;
            for (size_t i = 0; i < in; ++i) next_delta[i] += d * row[i];
        }
        delta.swap(next_delta);
    }

    for (size_t i = 0; i < delta.size(); ++i) out.input[i] += delta[i];
}

AdamState make_adam_state(const MlpParams& p) {
    AdamState s;
    for (size_t l = 0; l < p.weights.size(); ++l) {
        s.m_w.emplace_back(p.weights[l].size(), 0.0);
        s.v_w.emplace_back(p.weights[l].size(), 0.0);
        s.m_b.emplace_back(p.biases[l].size(), 0.0);
        s.v_b.emplace_back(p.biases[l].size(), 0.0);
    }
    return s;
}

namespace {

void adam_update(std::vector<double>& theta, const std::vector<double>& g,
                 std::vector<double>& m, std::vector<double>& v, double lr, double beta1,
                 double beta2, double eps, double bc1, double bc2, double weight_decay) {
    for (size_t i = 0; i < theta.size(); ++i) {
        if (!std::isfinite(g[i]))
            throw std::runtime_error("training diverged: non-finite gradient");
        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
        const double m_hat = m[i] / bc1;
        const double v_hat = v[i] / bc2;
        theta[i] -= lr * (m_hat / (std::sqrt(v_hat) + eps) + weight_decay * theta[i]);
    }
}

} // namespace

void adam_step(MlpParams& p, const Gradients& g, AdamState& state, double lr, double beta1,
               double beta2, double eps, double weight_decay) {
    check_shapes(p);
    if (!(lr > 0.0)) throw std::invalid_argument("learning rate must be > 0");
    if (g.weights.size() != p.weights.size())
        throw std::invalid_argument("gradient shape mismatch");

    ++state.t;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
    for (size_t l = 0; l < p.weights.size(); ++l) {
        adam_update(p.weights[l], g.weights[l], state.m_w[l], state.v_w[l], lr, beta1, beta2,
                    eps, bc1, bc2, weight_decay);
        adam_update(p.biases[l], g.biases[l], state.m_b[l], state.v_b[l], lr, beta1, beta2,
                    eps, bc1, bc2, 0.0);
    }
}

void soft_update(MlpParams& target, const MlpParams& online, double tau) {
    if (target.dims != online.dims) throw std::invalid_argument("soft_update shape mismatch");
    if (tau < 0.0 || tau > 1.0) throw std::invalid_argument("tau must lie in [0, 1]");
    for (size_t l = 0; l < target.weights.size(); ++l) {
        for (size_t i = 0; i < target.weights[l].size(); ++i)
            target.weights[l][i] = tau * online.weights[l][i] + (1.0 - tau) * target.weights[l][i];
        for (size_t i = 0; i < target.biases[l].size(); ++i)
            target.biases[l][i] = tau * online.biases[l][i] + (1.0 - tau) * target.biases[l][i];
    }
}

} // namespace cdmarl::nn
