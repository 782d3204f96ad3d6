#include "lsft/ftz.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace lsft {

namespace {

constexpr char kMagic[4] = {'F', 'T', 'Z', '1'};

template <typename U>
void put_le(std::vector<std::uint8_t>& out, U value) {
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
  }
}

template <typename U>
U get_le(const std::uint8_t* p) {
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) value |= static_cast<U>(p[i]) << (8 * i);
  return value;
}

std::size_t dtype_width(FtzDtype dtype) { return dtype == FtzDtype::Float32 ? 4 : 8; }

}  // namespace

std::vector<std::uint8_t> encode_ftz(const FeatureMatrix& f, FtzDtype dtype) {
  if (f.channels() > UINT32_MAX || f.samples() > UINT32_MAX) {
    throw FtzError("FTZ: matrix " + shape_string(f) + " exceeds 32-bit dimensions");
  }
  std::vector<std::uint8_t> out;
  out.reserve(kFtzHeaderSize + f.channels() * f.samples() * dtype_width(dtype));
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  put_le(out, static_cast<std::uint32_t>(f.channels()));
  put_le(out, static_cast<std::uint32_t>(f.samples()));
  out.push_back(static_cast<std::uint8_t>(dtype));

  const RowMatrix& m = f.mat();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (dtype == FtzDtype::Float32) {
        put_le(out, std::bit_cast<std::uint32_t>(static_cast<float>(m(i, j))));
      } else {
        put_le(out, std::bit_cast<std::uint64_t>(m(i, j)));
      }
    }
  }
  return out;
}

FtzHeader parse_ftz_header(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw FtzError("FTZ: bad magic (expected \"FTZ1\")");
  }
  if (bytes.size() < kFtzHeaderSize) {
    throw FtzError("FTZ: truncated header (" + std::to_string(bytes.size()) + " bytes)");
  }
  FtzHeader h;
  h.channels = get_le<std::uint32_t>(bytes.data() + 4);
  h.samples = get_le<std::uint32_t>(bytes.data() + 8);
  const std::uint8_t tag = bytes[12];
  if (tag > 1) throw FtzError("FTZ: unknown dtype tag " + std::to_string(tag));
  h.dtype = static_cast<FtzDtype>(tag);
  if (h.channels == 0 || h.samples == 0) {
    throw FtzError("FTZ: zero dimension in header");
  }

  const std::uint64_t expected = static_cast<std::uint64_t>(h.channels) * h.samples *
                                 dtype_width(h.dtype);
  const std::uint64_t actual = bytes.size() - kFtzHeaderSize;
  if (actual < expected) {
    std::ostringstream os;
    os << "FTZ: truncated payload (" << actual << " of " << expected << " bytes)";
    throw FtzError(os.str());
  }
  if (actual > expected) {
    std::ostringstream os;
    os << "FTZ: size mismatch, " << actual - expected << " trailing bytes after " << h.channels
       << "x" << h.samples << " payload";
    throw FtzError(os.str());
  }
  return h;
}

FeatureMatrix decode_ftz(const std::vector<std::uint8_t>& bytes) {
  const FtzHeader h = parse_ftz_header(bytes);
  RowMatrix m(h.channels, h.samples);
  const std::uint8_t* p = bytes.data() + kFtzHeaderSize;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (h.dtype == FtzDtype::Float32) {
        m(i, j) = static_cast<double>(std::bit_cast<float>(get_le<std::uint32_t>(p)));
        p += 4;
      } else {
        m(i, j) = std::bit_cast<double>(get_le<std::uint64_t>(p));
        p += 8;
      }
    }
  }
  return FeatureMatrix(std::move(m));
}

void write_ftz(const FeatureMatrix& f, const std::filesystem::path& path, FtzDtype dtype) {
  const std::vector<std::uint8_t> bytes = encode_ftz(f, dtype);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw FtzError("FTZ: cannot open " + path.string() + " for writing");
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw FtzError("FTZ: write failed for " + path.string());
}

FeatureMatrix read_ftz(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FtzError("FTZ: cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)),
                                  std::istreambuf_iterator<char>());
  try {
    return decode_ftz(bytes);
  } catch (const FtzError& e) {
    throw FtzError(std::string(e.what()) + " in " + path.string());
  }
}

}  // namespace lsft
