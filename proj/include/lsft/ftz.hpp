#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include "lsft/feature.hpp"

namespace lsft {

/// FTZ feature files.
///
///   offset 0   4 bytes  magic "FTZ1"
///   offset 4   u32 LE   channels C
///   offset 8   u32 LE   samples n
///   offset 12  u8       dtype: 0 = f32 LE, 1 = f64 LE
///   offset 13  C·n values, channel by channel (row-major)
///
/// Any change to the layout bumps the magic.
enum class FtzDtype : std::uint8_t { Float32 = 0, Float64 = 1 };

inline constexpr std::size_t kFtzHeaderSize = 13;

class FtzError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FtzHeader {
  std::uint32_t channels = 0;
  std::uint32_t samples = 0;
  FtzDtype dtype = FtzDtype::Float64;
};

std::vector<std::uint8_t> encode_ftz(const FeatureMatrix& f, FtzDtype dtype);
FeatureMatrix decode_ftz(const std::vector<std::uint8_t>& bytes);

/// Throws FtzError with distinct messages for bad magic, unknown dtype,
/// truncated payload and trailing bytes.
FtzHeader parse_ftz_header(const std::vector<std::uint8_t>& bytes);

void write_ftz(const FeatureMatrix& f, const std::filesystem::path& path,
               FtzDtype dtype = FtzDtype::Float64);
FeatureMatrix read_ftz(const std::filesystem::path& path);

}  // namespace lsft
