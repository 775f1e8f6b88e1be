#pragma once

// 8-bit grayscale images (binary PGM, maxval 255) and their split into
// non-overlapping b x b blocks used as k = b*b dimensional vectors.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "vq/errors.hpp"
#include "vq/io.hpp"
#include "vq/types.hpp"

namespace vq {

struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;  // row-major, width * height

  std::uint8_t at(std::size_t x, std::size_t y) const noexcept { return pixels[y * width + x]; }
  friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

namespace detail {

class PgmHeaderReader {
 public:
  explicit PgmHeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t number(const char* what) {
    skip_space_and_comments();
    std::size_t v = 0;
    std::size_t digits = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      v = v * 10 + (bytes_[pos_++] - '0');
      if (++digits > 9) throw FormatError(std::string("PGM ") + what + " is too large");
    }
    if (digits == 0) throw FormatError(std::string("PGM header: missing ") + what);
    return v;
  }

  // Exactly one whitespace byte separates maxval from the raster.
  std::size_t raster_start() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_]))
      throw TruncatedError("PGM header: missing raster");
    return pos_ + 1;
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 2;
};

}  // namespace detail

inline GrayImage parse_pgm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5')
    throw UnsupportedFormatError("only binary PGM (P5) images are supported");
  detail::PgmHeaderReader header(bytes);
  GrayImage img;
  img.width = header.number("width");
  img.height = header.number("height");
  const std::size_t maxval = header.number("maxval");
  if (maxval != 255)
    throw UnsupportedFormatError("PGM maxval " + std::to_string(maxval) + " is not supported (need 255)");
  if (img.width == 0 || img.height == 0) throw FormatError("PGM image has zero size");
  const std::size_t start = header.raster_start();
  const std::size_t count = img.width * img.height;
  if (bytes.size() - start < count)
    throw TruncatedError("PGM raster truncated: " + std::to_string(bytes.size() - start) + " of " +
                         std::to_string(count) + " pixels");
  img.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(start),
                    bytes.begin() + static_cast<std::ptrdiff_t>(start + count));
  return img;
}

inline Bytes serialize_pgm(const GrayImage& img) {
  const std::string header =
      "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  Bytes out(header.begin(), header.end());
  out.insert(out.end(), img.pixels.begin(), img.pixels.end());
  return out;
}

inline GrayImage load_pgm(const std::filesystem::path& path) { return parse_pgm(read_file(path)); }

inline void save_pgm(const GrayImage& img, const std::filesystem::path& path) {
  write_file(path, serialize_pgm(img));
}

enum class Padding { replicate };

/// Geometry of an image cut into b x b blocks, in row-major block order.
struct BlockGrid {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t block = 1;
  Padding padding = Padding::replicate;

  std::size_t blocks_across() const noexcept { return (width + block - 1) / block; }
  std::size_t blocks_down() const noexcept { return (height + block - 1) / block; }
  std::size_t vector_count() const noexcept { return blocks_across() * blocks_down(); }
  std::size_t dim() const noexcept { return block * block; }
};

struct ImageBlocks {
  VectorSet vectors;
  BlockGrid grid;
};

/// Flattens each block row-major into one vector. Blocks that overhang the
/// right/bottom edge repeat the last column/row.
inline ImageBlocks image_to_blocks(const GrayImage& img, std::size_t block) {
  if (block == 0) throw UsageError("block size must be at least 1");
  BlockGrid grid{img.width, img.height, block, Padding::replicate};
  VectorSet vectors(grid.vector_count(), grid.dim());
  std::size_t v = 0;
  for (std::size_t by = 0; by < grid.blocks_down(); ++by) {
    for (std::size_t bx = 0; bx < grid.blocks_across(); ++bx, ++v) {
      auto row = vectors.row(v);
      for (std::size_t dy = 0; dy < block; ++dy) {
        const std::size_t y = std::min(by * block + dy, img.height - 1);
        for (std::size_t dx = 0; dx < block; ++dx) {
          const std::size_t x = std::min(bx * block + dx, img.width - 1);
          row[dy * block + dx] = img.at(x, y);
        }
      }
    }
  }
  return {std::move(vectors), grid};
}

inline std::uint8_t to_pixel(double v) noexcept {
  const double clamped = std::clamp(v, 0.0, 255.0);
  return static_cast<std::uint8_t>(std::floor(clamped + 0.5));
}

/// Inverse of image_to_blocks: clamps to [0, 255], rounds half up, drops padding.
inline GrayImage blocks_to_image(const VectorSet& vectors, const BlockGrid& grid) {
  if (vectors.size() != grid.vector_count())
    throw UsageError("expected " + std::to_string(grid.vector_count()) + " block vectors, got " +
                     std::to_string(vectors.size()));
  if (vectors.dim() != grid.dim())
    throw UsageError("block vectors have dimension " + std::to_string(vectors.dim()) + ", grid needs " +
                     std::to_string(grid.dim()));
  GrayImage img{grid.width, grid.height, std::vector<std::uint8_t>(grid.width * grid.height)};
  const std::size_t b = grid.block;
  std::size_t v = 0;
  for (std::size_t by = 0; by < grid.blocks_down(); ++by) {
    for (std::size_t bx = 0; bx < grid.blocks_across(); ++bx, ++v) {
      const auto row = vectors.row(v);
      for (std::size_t dy = 0; dy < b; ++dy) {
        const std::size_t y = by * b + dy;
        if (y >= grid.height) break;
        for (std::size_t dx = 0; dx < b; ++dx) {
          const std::size_t x = bx * b + dx;
          if (x >= grid.width) break;
          img.pixels[y * grid.width + x] = to_pixel(row[dy * b + dx]);
        }
      }
    }
  }
  return img;
}

/// Mean absolute per-pixel difference; images must have equal size.
inline double mean_absolute_error(const GrayImage& a, const GrayImage& b) {
  if (a.width != b.width || a.height != b.height)
    throw UsageError("images differ in size");
  if (a.pixels.empty()) return 0.0;
  std::uint64_t sum = 0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i)
    sum += static_cast<std::uint64_t>(std::abs(int{a.pixels[i]} - int{b.pixels[i]}));
  return static_cast<double>(sum) / static_cast<double>(a.pixels.size());
}

}  // namespace vq
