#include "cdmarl/model_io.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

namespace cdmarl {

namespace {

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<uint8_t>& out, uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void put_f64(std::vector<uint8_t>& out, double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    put_u64(out, bits);
}

void put_f32(std::vector<uint8_t>& out, float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    put_u32(out, bits);
}

class Reader {
  public:
    explicit Reader(std::span<const uint8_t> bytes) : bytes_(bytes) {}

    size_t remaining() const { return bytes_.size() - pos_; }

    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(bytes_[pos_ + i]) << (8 * i);
        pos_ += 4;
        return v;
    }

    uint64_t u64() {
        need(8);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(bytes_[pos_ + i]) << (8 * i);
        pos_ += 8;
        return v;
    }

    uint8_t u8() {
        need(1);
        return bytes_[pos_++];
    }

    double f64() {
        const uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, sizeof v);
        return v;
    }

    double f32_as_f64() {
        const uint32_t bits = u32();
        float v;
        std::memcpy(&v, &bits, sizeof v);
        return static_cast<double>(v);
    }

  private:
    void need(size_t n) {
        if (remaining() < n)
            throw model_load_error(model_load_error::Kind::Truncated,
                                   "model file ends mid-field");
    }

    std::span<const uint8_t> bytes_;
    size_t pos_ = 0;
};

} // namespace

uint64_t fnv1a64(std::span<const uint8_t> bytes) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (uint8_t b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::vector<uint8_t> encode_model(const nn::MlpParams& params, ActionBounds bounds,
                                  Precision precision) {
    params.validate();
    if (!(bounds.p_min < bounds.p_max))
        throw std::invalid_argument("action bounds require p_min < p_max");
    for (const auto& w : params.weights)
        for (double x : w)
            if (!std::isfinite(x)) throw std::invalid_argument("non-finite weight in export");
    for (const auto& b : params.biases)
        for (double x : b)
            if (!std::isfinite(x)) throw std::invalid_argument("non-finite bias in export");

    std::vector<uint8_t> out;
    out.insert(out.end(), kModelMagic, kModelMagic + 4);
    put_u32(out, kModelFormatVersion);
    out.push_back(static_cast<uint8_t>(precision));
    put_u32(out, static_cast<uint32_t>(params.dims.size()));
    for (int d : params.dims) put_u32(out, static_cast<uint32_t>(d));
    for (nn::Act a : params.act) out.push_back(static_cast<uint8_t>(a));
    put_f64(out, bounds.p_min);
    put_f64(out, bounds.p_max);

    auto put_scalar = [&](double v) {
        if (precision == Precision::F64)
            put_f64(out, v);
        else
            put_f32(out, static_cast<float>(v));
    };
    for (size_t l = 0; l < params.weights.size(); ++l) {
        for (double v : params.weights[l]) put_scalar(v);
        for (double v : params.biases[l]) put_scalar(v);
    }

    put_u64(out, fnv1a64(out));
    return out;
}

void export_model(const nn::MlpParams& params, ActionBounds bounds, Precision precision,
                  const std::string& path) {
    const std::vector<uint8_t> bytes = encode_model(params, bounds, precision);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + path + " for writing");
    f.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
    if (!f) throw std::runtime_error("write failed for " + path);
}

LoadedModel decode_model(std::span<const uint8_t> bytes) {
    if (bytes.size() < 8 + 4 + 4 + 1 + 4)
        throw model_load_error(model_load_error::Kind::Truncated, "model file too small");

    const uint64_t stored = Reader(bytes.subspan(bytes.size() - 8)).u64();
    const uint64_t computed = fnv1a64(bytes.first(bytes.size() - 8));
    if (stored != computed)
        throw model_load_error(model_load_error::Kind::BadChecksum,
                               "model checksum mismatch");

    Reader r(bytes.first(bytes.size() - 8));
    char magic[4];
    for (char& c : magic) c = static_cast<char>(r.u8());
    if (std::memcmp(magic, kModelMagic, 4) != 0)
        throw model_load_error(model_load_error::Kind::BadMagic, "not a model file");

    const uint32_t version = r.u32();
    if (version != kModelFormatVersion)
        throw model_load_error(model_load_error::Kind::BadVersion,
                               "unsupported model format version " + std::to_string(version));

    const uint8_t prec_byte = r.u8();
    if (prec_byte != 4 && prec_byte != 8)
        throw model_load_error(model_load_error::Kind::BadDims,
                               "invalid precision byte " + std::to_string(prec_byte));
    const Precision precision = static_cast<Precision>(prec_byte);

    const uint32_t n_dims = r.u32();
    if (n_dims < 2 || n_dims > 64)
        throw model_load_error(model_load_error::Kind::BadDims, "implausible layer count");

    LoadedModel model;
    model.precision = precision;
    auto& p = model.params;
    for (uint32_t i = 0; i < n_dims; ++i) {
        const uint32_t d = r.u32();
        if (d < 1 || d > 1u << 20)
            throw model_load_error(model_load_error::Kind::BadDims, "implausible layer width");
        p.dims.push_back(static_cast<int>(d));
    }
    for (uint32_t l = 0; l + 1 < n_dims; ++l) {
        const uint8_t tag = r.u8();
        if (tag > 2)
            throw model_load_error(model_load_error::Kind::BadDims,
                                   "unknown activation tag " + std::to_string(tag));
        p.act.push_back(static_cast<nn::Act>(tag));
    }
    model.bounds.p_min = r.f64();
    model.bounds.p_max = r.f64();

    for (uint32_t l = 0; l + 1 < n_dims; ++l) {
        const size_t in = static_cast<size_t>(p.dims[l]);
        const size_t out = static_cast<size_t>(p.dims[l + 1]);
        std::vector<double> w(in * out), b(out);
        for (auto& v : w) v = precision == Precision::F64 ? r.f64() : r.f32_as_f64();
        for (auto& v : b) v = precision == Precision::F64 ? r.f64() : r.f32_as_f64();
        p.weights.push_back(std::move(w));
        p.biases.push_back(std::move(b));
    }
    if (r.remaining() != 0)
        throw model_load_error(model_load_error::Kind::BadDims,
                               "trailing bytes after parameters");

    p.validate();
    if (!(model.bounds.p_min < model.bounds.p_max))
        throw model_load_error(model_load_error::Kind::BadDims, "invalid action bounds");
    return model;
}

LoadedModel load_model(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw model_load_error(model_load_error::Kind::Io, "cannot open " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                               std::istreambuf_iterator<char>());
    if (f.bad()) throw model_load_error(model_load_error::Kind::Io, "read failed for " + path);
    return decode_model(bytes);
}

} // namespace cdmarl
