#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <new>

#include "cdmarl/ddpg.hpp"
#include "cdmarl/inference.hpp"
#include "cdmarl/model_io.hpp"
#include "cdmarl/rng.hpp"

using namespace cdmarl;

// global allocation counter so the zero-allocation claim on infer is testable;
// new pairs with malloc and delete with free consistently across this binary
#pragma GCC diagnostic ignored "-Wmismatched-new-delete"
static std::atomic<long> g_allocations{0};

void* operator new(std::size_t size) {
    g_allocations.fetch_add(1, std::memory_order_relaxed);
    if (void* p = std::malloc(size)) return p;
    throw std::bad_alloc();
}

void* operator new[](std::size_t size) {
    g_allocations.fetch_add(1, std::memory_order_relaxed);
    if (void* p = std::malloc(size)) return p;
    throw std::bad_alloc();
}

void operator delete(void* p) noexcept { std::free(p); }
void operator delete[](void* p) noexcept { std::free(p); }
void operator delete(void* p, std::size_t) noexcept { std::free(p); }
void operator delete[](void* p, std::size_t) noexcept { std::free(p); }

namespace {

nn::MlpParams actor_like(uint64_t seed) {
    Rng rng(seed);
    const std::vector<int> dims = {6, 10, 1};
    const std::vector<nn::Act> act = {nn::Act::Relu, nn::Act::Tanh};
    return nn::make_mlp(dims, act, rng);
}

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

const ActionBounds kBounds{0.1, 5.0};

// rewrite the trailing checksum after tampering with the payload
void refresh_checksum(std::vector<uint8_t>& bytes) {
    const uint64_t h = fnv1a64({bytes.data(), bytes.size() - 8});
    for (int i = 0; i < 8; ++i)
        bytes[bytes.size() - 8 + static_cast<size_t>(i)] = static_cast<uint8_t>(h >> (8 * i));
}

} // namespace

TEST_CASE("f64 export and load round-trips bit exactly") {
    const nn::MlpParams params = actor_like(1);
    const std::string path = temp_path("roundtrip_f64.mrng");
    export_model(params, kBounds, Precision::F64, path);
    const LoadedModel loaded = load_model(path);

    CHECK(loaded.params.dims == params.dims);
    CHECK(loaded.params.act == params.act);
    CHECK(loaded.params.weights == params.weights);
    CHECK(loaded.params.biases == params.biases);
    CHECK(loaded.bounds.p_min == kBounds.p_min);
    CHECK(loaded.bounds.p_max == kBounds.p_max);
    CHECK(loaded.precision == Precision::F64);
}

TEST_CASE("f32 export keeps forward outputs within 1e-5") {
    const nn::MlpParams params = actor_like(2);
    const std::string path = temp_path("roundtrip_f32.mrng");
    export_model(params, kBounds, Precision::F32, path);
    const LoadedModel loaded = load_model(path);

    Rng rng(3);
    for (int i = 0; i < 200; ++i) {
        std::vector<double> input(6);
        for (auto& v : input) v = rng.uniform(-1.0, 1.0);
        const double a = nn::forward(params, input)[0];
        const double b = nn::forward(loaded.params, input)[0];
        CHECK(std::abs(a - b) < 1e-5);
    }
}

TEST_CASE("corrupted checksum fails the load") {
    const nn::MlpParams params = actor_like(4);
    std::vector<uint8_t> bytes = encode_model(params, kBounds, Precision::F64);
    bytes[bytes.size() - 1] ^= 0xff;
    CHECK_THROWS_AS(decode_model(bytes), model_load_error);
    try {
        decode_model(bytes);
    } catch (const model_load_error& e) {
        CHECK(e.kind() == model_load_error::Kind::BadChecksum);
    }
}

TEST_CASE("any single-byte corruption is detected") {
    const nn::MlpParams params = actor_like(5);
    const std::vector<uint8_t> clean = encode_model(params, kBounds, Precision::F32);
    Rng rng(6);
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<uint8_t> bytes = clean;
        const size_t pos = static_cast<size_t>(rng.uniform_index(bytes.size()));
        uint8_t flip;
        do {
            flip = static_cast<uint8_t>(rng.uniform_index(256));
        } while (flip == bytes[pos]);
        bytes[pos] = flip;
        CHECK_THROWS_AS(decode_model(bytes), model_load_error);
    }
}

TEST_CASE("truncated files never yield an engine") {
    const nn::MlpParams params = actor_like(7);
    const std::vector<uint8_t> clean = encode_model(params, kBounds, Precision::F64);
    for (size_t keep : {size_t{0}, size_t{3}, size_t{12}, clean.size() / 2, clean.size() - 1}) {
        const std::vector<uint8_t> cut(clean.begin(), clean.begin() + static_cast<long>(keep));
        CHECK_THROWS_AS(decode_model(cut), model_load_error);
    }
}

TEST_CASE("a bumped format version is rejected as unsupported") {
    const nn::MlpParams params = actor_like(8);
    std::vector<uint8_t> bytes = encode_model(params, kBounds, Precision::F64);
    bytes[4] += 1; // low byte of the little-endian version
    refresh_checksum(bytes);
    try {
        decode_model(bytes);
        FAIL("expected a version error");
    } catch (const model_load_error& e) {
        CHECK(e.kind() == model_load_error::Kind::BadVersion);
    }
}

TEST_CASE("wrong magic is rejected") {
    const nn::MlpParams params = actor_like(9);
    std::vector<uint8_t> bytes = encode_model(params, kBounds, Precision::F64);
    bytes[0] = 'X';
    refresh_checksum(bytes);
    try {
        decode_model(bytes);
        FAIL("expected a magic error");
    } catch (const model_load_error& e) {
        CHECK(e.kind() == model_load_error::Kind::BadMagic);
    }
}

TEST_CASE("missing file raises an io error") {
    CHECK_THROWS_AS(load_model(temp_path("does_not_exist.mrng")), model_load_error);
}

TEST_CASE("zero-parameter artifact infers the midpoint power") {
    const std::vector<int> dims = {6, 10, 1};
    const std::vector<nn::Act> act = {nn::Act::Relu, nn::Act::Tanh};
    const nn::MlpParams params = nn::make_zero_mlp(dims, act);
    const std::string path = temp_path("zero.mrng");
    export_model(params, kBounds, Precision::F32, path);
    InferenceEngine engine = InferenceEngine::load(path);
    const std::vector<double> input(6, 0.3);
    CHECK(engine.infer(input) == doctest::Approx(2.55).epsilon(1e-12));
}

TEST_CASE("engine output is identical across repeated calls") {
    const nn::MlpParams params = actor_like(10);
    InferenceEngine engine = InferenceEngine::from_model(params, kBounds);
    const std::vector<double> input = {0.2, -0.4, 0.6, -0.8, 1.0, -1.0};
    const double first = engine.infer(input);
    for (int i = 0; i < 20; ++i) CHECK(engine.infer(input) == first);
}

TEST_CASE("engine agrees with the noise-free agent action") {
    DdpgOptions opt;
    opt.batch_size = 4;
    opt.replay_capacity = 16;
    opt.critic_hidden = {8};
    DdpgAgent agent(6, kBounds.p_min, kBounds.p_max, opt, 11);

    const std::string f64_path = temp_path("agree_f64.mrng");
    const std::string f32_path = temp_path("agree_f32.mrng");
    export_model(agent.actor(), kBounds, Precision::F64, f64_path);
    export_model(agent.actor(), kBounds, Precision::F32, f32_path);
    InferenceEngine engine64 = InferenceEngine::load(f64_path);
    InferenceEngine engine32 = InferenceEngine::load(f32_path);

    Rng rng(12);
    for (int i = 0; i < 1000; ++i) {
        std::vector<double> input(6);
        for (auto& v : input) v = rng.uniform(-1.0, 1.0);
        const double reference = agent.act(input, false).power;
        CHECK(std::abs(engine64.infer(input) - reference) < 1e-12);
        CHECK(std::abs(engine32.infer(input) - reference) < 1e-5);
    }
}

TEST_CASE("infer never allocates after construction") {
    const nn::MlpParams params = actor_like(13);
    InferenceEngine engine = InferenceEngine::from_model(params, kBounds);
    const std::vector<double> input = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
    engine.infer(input); // warm anything lazy

    const long before = g_allocations.load(std::memory_order_relaxed);
    double sink = 0.0;
    for (int i = 0; i < 1000; ++i) sink += engine.infer(input);
    const long after = g_allocations.load(std::memory_order_relaxed);
    CHECK(after == before);
    CHECK(std::isfinite(sink));
}

TEST_CASE("naive reference path gives the same answer") {
    const nn::MlpParams params = actor_like(14);
    InferenceEngine engine = InferenceEngine::from_model(params, kBounds);
    Rng rng(15);
    for (int i = 0; i < 100; ++i) {
        std::vector<double> input(6);
        for (auto& v : input) v = rng.uniform(-1.0, 1.0);
        CHECK(engine.infer(input) ==
              doctest::Approx(naive_infer(params, kBounds, input)).epsilon(1e-12));
    }
}

TEST_CASE("latency percentiles are ordered") {
    const nn::MlpParams params = actor_like(16);
    InferenceEngine engine = InferenceEngine::from_model(params, kBounds);
    const std::vector<double> input(6, 0.5);
    const LatencyStats stats = bench_latency(engine, 1000, input);
    CHECK(stats.median_ns >= 0.0);
    CHECK(stats.p99_ns >= stats.median_ns);
    CHECK(stats.n_runs == 1000);
    CHECK_THROWS_AS(bench_latency(engine, 10, input), std::invalid_argument);
}

TEST_CASE("export rejects non-finite parameters") {
    nn::MlpParams params = actor_like(17);
    params.weights[0][3] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(encode_model(params, kBounds, Precision::F64), std::invalid_argument);
}
