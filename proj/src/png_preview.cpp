#include "pcatlas/png_preview.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "pcatlas/error.hpp"

namespace pcatlas {
namespace {

void put_be32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v >> 24));
  out.push_back(static_cast<char>(v >> 16));
  out.push_back(static_cast<char>(v >> 8));
  out.push_back(static_cast<char>(v));
}

void put_chunk(std::string& out, const char type[4], const std::string& data) {
  put_be32(out, static_cast<std::uint32_t>(data.size()));
  std::string body(type, 4);
  body += data;
  out += body;
  const auto crc = crc32(0L, reinterpret_cast<const Bytef*>(body.data()),
                         static_cast<uInt>(body.size()));
  put_be32(out, static_cast<std::uint32_t>(crc));
}

}  // namespace

std::string encode_png_rgb(std::uint32_t width, std::uint32_t height,
                           std::span<const std::uint8_t> rgb) {
  if (rgb.size() != static_cast<std::size_t>(width) * height * 3) {
    throw Error(ErrorKind::kSize, "RGB buffer does not match image size");
  }
  std::string raw;
  raw.reserve((static_cast<std::size_t>(width) * 3 + 1) * height);
  for (std::uint32_t y = 0; y < height; ++y) {
    raw.push_back('\0');  // filter: none
    const auto* row = rgb.data() + static_cast<std::size_t>(y) * width * 3;
    raw.append(reinterpret_cast<const char*>(row), static_cast<std::size_t>(width) * 3);
  }
  uLongf packed_size = compressBound(static_cast<uLong>(raw.size()));
  std::string packed(packed_size, '\0');
  if (compress2(reinterpret_cast<Bytef*>(packed.data()), &packed_size,
                reinterpret_cast<const Bytef*>(raw.data()), static_cast<uLong>(raw.size()),
                Z_BEST_COMPRESSION) != Z_OK) {
    throw Error(ErrorKind::kIo, "zlib compression failed");
  }
  packed.resize(packed_size);

  std::string png("\x89PNG\r\n\x1a\n", 8);
  std::string header;
  put_be32(header, width);
  put_be32(header, height);
  header += std::string("\x08\x02\x00\x00\x00", 5);  // 8-bit RGB
  put_chunk(png, "IHDR", header);
  put_chunk(png, "IDAT", packed);
  put_chunk(png, "IEND", "");
  return png;
}

std::string atlas_preview_png(const Atlas& atlas) {
  const auto n = atlas.pixel_count();
  std::array<double, 3> lo{}, hi{};
  lo.fill(std::numeric_limits<double>::infinity());
  hi.fill(-std::numeric_limits<double>::infinity());
  for (std::size_t p = 0; p < n; ++p) {
    if (!atlas.mask[p]) continue;
    for (int c = 0; c < 3; ++c) {
      lo[c] = std::min(lo[c], atlas.at(c, p));
      hi[c] = std::max(hi[c], atlas.at(c, p));
    }
  }
  std::vector<std::uint8_t> rgb(n * 3, 0);
  for (std::size_t p = 0; p < n; ++p) {
    if (!atlas.mask[p]) continue;
    for (int c = 0; c < 3; ++c) {
      const double range = hi[c] - lo[c];
      const double t = range > 0.0 ? (atlas.at(c, p) - lo[c]) / range : 0.5;
      rgb[p * 3 + c] = static_cast<std::uint8_t>(std::lround(t * 255.0));
    }
  }
  return encode_png_rgb(atlas.side, atlas.side, rgb);
}

}  // namespace pcatlas
