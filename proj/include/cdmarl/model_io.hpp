#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>

#include "cdmarl/mlp.hpp"

namespace cdmarl {

// Portable actor artifact, little-endian throughout:
//
//   offset  size  field
//   0       4     magic "MRNG"
//   4       4     u32 format version (currently 1)
//   8       1     u8 bytes per scalar: 4 (f32) or 8 (f64)
//   9       4     u32 number of layer dims D
//   13      4*D   u32 dims
//   ..      D-1   u8 activation tag per layer: 0 relu, 1 tanh, 2 identity
//   ..      8     f64 p_min (mW)
//   ..      8     f64 p_max (mW)
//   ..      ..    per layer: weights (row-major out*in) then biases (out),
//                 each scalar in the declared precision
//   ..      8     u64 FNV-1a checksum of every preceding byte
//
// The file is self-describing: nothing else is needed to run inference.

enum class Precision : uint8_t { F32 = 4, F64 = 8 };

struct ActionBounds {
    double p_min = 0.0;
    double p_max = 0.0;
};

inline constexpr uint32_t kModelFormatVersion = 1;
inline constexpr char kModelMagic[4] = {'M', 'R', 'N', 'G'};

class model_load_error : public std::runtime_error {
  public:
    enum class Kind { Io, BadMagic, BadVersion, BadChecksum, BadDims, Truncated };

    model_load_error(Kind kind, const std::string& msg)
        : std::runtime_error(msg), kind_(kind) {}
    Kind kind() const { return kind_; }

  private:
    Kind kind_;
};

uint64_t fnv1a64(std::span<const uint8_t> bytes);

// Serializes the network; f32 export rounds each scalar to nearest. Rejects
// non-finite parameters and invalid bounds with std::invalid_argument.
void export_model(const nn::MlpParams& params, ActionBounds bounds, Precision precision,
                  const std::string& path);

std::vector<uint8_t> encode_model(const nn::MlpParams& params, ActionBounds bounds,
                                  Precision precision);

struct LoadedModel {
    nn::MlpParams params; // f32 payloads are widened back to f64 values
    ActionBounds bounds;
    Precision precision = Precision::F64;
};

LoadedModel decode_model(std::span<const uint8_t> bytes);
LoadedModel load_model(const std::string& path);

} // namespace cdmarl
