#pragma once

// Persistence: CSV vectors, the VQCB codebook file and the VQEN encoded file.
//
// Binary layouts (all integers and reals little-endian):
//   VQCB: "VQCB" u32 version, u32 N, u32 k, N*k f64 row-major, u8 metric tag
//   VQEN: "VQEN" u32 version, u32 N, u32 k, u64 count, count * u32 index

#include <bit>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "vq/codec.hpp"
#include "vq/errors.hpp"
#include "vq/types.hpp"

namespace vq {

using Bytes = std::vector<std::uint8_t>;

inline constexpr std::uint32_t kCodebookFormatVersion = 1;
inline constexpr std::uint32_t kEncodedFormatVersion = 1;

/// Shortest decimal text that parses back to the same double; locale-independent.
inline std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

inline Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  Bytes out((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("error while reading '" + path.string() + "'");
  return out;
}

inline void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("error while writing '" + path.string() + "'");
}

inline void write_text_file(const std::filesystem::path& path, std::string_view text) {
  write_file(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

inline double parse_field(std::string_view field, std::size_t row, std::size_t col) {
  std::string_view f = trim(field);
  if (!f.empty() && f.front() == '+') f.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
  if (f.empty() || res.ec != std::errc{} || res.ptr != f.data() + f.size())
    throw IngestError("row " + std::to_string(row) + " column " + std::to_string(col) +
                          ": '" + std::string(trim(field)) + "' is not a number",
                      row, col);
  if (!std::isfinite(v))
    throw IngestError("row " + std::to_string(row) + " column " + std::to_string(col) +
                          ": value is not finite",
                      row, col);
  return v;
}

}  // namespace detail

/// Parses comma-separated rows of numbers. Blank lines and lines starting with
/// '#' are skipped; rows are numbered by physical line. Requires >= 1 row.
inline VectorSet parse_vectors_csv(std::string_view text) {
  std::vector<double> values;
  std::size_t dim = 0;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    const std::string_view body = detail::trim(line);
    if (body.empty() || body.front() == '#') continue;

    std::size_t cols = 0;
    std::string_view rest = body;
    for (;;) {
      const auto comma = rest.find(',');
      values.push_back(detail::parse_field(rest.substr(0, comma), line_no, ++cols));
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
    if (dim == 0) {
      dim = cols;
    } else if (cols != dim) {
      throw IngestError("row " + std::to_string(line_no) + " has " + std::to_string(cols) +
                            " columns, expected " + std::to_string(dim),
                        line_no);
    }
  }
  if (dim == 0) throw IngestError("no data rows found", 0);
  return VectorSet(std::move(values), dim);
}

inline VectorSet load_vectors_csv(const std::filesystem::path& path) {
  const Bytes bytes = read_file(path);
  return parse_vectors_csv({reinterpret_cast<const char*>(bytes.data()), bytes.size()});
}

inline TrainingSet load_training_csv(const std::filesystem::path& path) {
  return TrainingSet(load_vectors_csv(path));
}

inline void write_vectors_csv(std::ostream& out, const VectorSet& vectors) {
  for (std::size_t j = 0; j < vectors.size(); ++j) {
    const auto row = vectors.row(j);
    for (std::size_t d = 0; d < row.size(); ++d) {
      if (d) out << ',';
      out << format_number(row[d]);
    }
    out << '\n';
  }
}

inline void save_vectors_csv(const VectorSet& vectors, const std::filesystem::path& path) {
  std::ostringstream out;
  write_vectors_csv(out, vectors);
  write_text_file(path, out.str());
}

// ---------------------------------------------------------------------------
// Binary formats
// ---------------------------------------------------------------------------

namespace detail {

class ByteWriter {
 public:
  void magic(std::string_view m) { bytes_.insert(bytes_.end(), m.begin(), m.end()); }
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
  Bytes take() { return std::move(bytes_); }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  Bytes bytes_;
};

class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> bytes, std::string_view what)
      : bytes_(bytes), what_(what) {}

  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

  void expect_magic(std::string_view m) {
    need(m.size());
    if (std::memcmp(bytes_.data() + pos_, m.data(), m.size()) != 0)
      throw BadMagicError(std::string(what_) + ": bad magic, expected \"" + std::string(m) + "\"");
    pos_ += m.size();
  }
  std::uint8_t u8() { return static_cast<std::uint8_t>(get(1)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  double f64() { return std::bit_cast<double>(get(8)); }

  void need(std::size_t n) const {
    if (remaining() < n)
      throw TruncatedError(std::string(what_) + ": truncated (needed " + std::to_string(n) +
                           " more bytes, " + std::to_string(remaining()) + " left)");
  }

 private:
  std::uint64_t get(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= std::uint64_t{bytes_[pos_ + i]} << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }

  std::span<const std::uint8_t> bytes_;
  std::string_view what_;
  std::size_t pos_ = 0;
};

inline void check_version(std::uint32_t got, std::uint32_t want, std::string_view what) {
  if (got != want)
    throw VersionMismatchError(std::string(what) + ": unsupported version " + std::to_string(got) +
                               " (expected " + std::to_string(want) + ")");
}

}  // namespace detail

struct StoredCodebook {
  Codebook codebook;
  Metric metric = Metric::squared_euclidean;
};

inline Bytes serialize_codebook(const Codebook& cb, Metric metric) {
  detail::ByteWriter w;
  w.magic("VQCB");
  w.u32(kCodebookFormatVersion);
  w.u32(static_cast<std::uint32_t>(cb.size()));
  w.u32(static_cast<std::uint32_t>(cb.dim()));
  for (double v : cb.vectors().values()) w.f64(v);
  w.u8(static_cast<std::uint8_t>(metric));
  return w.take();
}

inline StoredCodebook deserialize_codebook(std::span<const std::uint8_t> bytes) {
  constexpr std::string_view what = "codebook file";
  detail::ByteReader r(bytes, what);
  r.expect_magic("VQCB");
  detail::check_version(r.u32(), kCodebookFormatVersion, what);
  const std::uint64_t n = r.u32();
  const std::uint64_t k = r.u32();
  if (n == 0 || k == 0) throw FormatError("codebook file: empty codebook (N=" +
                                          std::to_string(n) + ", k=" + std::to_string(k) + ")");
  const std::uint64_t payload = n * k * 8 + 1;
  r.need(payload);
  if (r.remaining() != payload)
    throw FormatError("codebook file: " + std::to_string(r.remaining() - payload) +
                      " trailing bytes after payload");
  std::vector<double> values(n * k);
  for (auto& v : values) v = r.f64();
  const std::uint8_t tag = r.u8();
  if (tag > 1) throw FormatError("codebook file: unknown metric tag " + std::to_string(tag));
  VectorSet rows(std::move(values), k);
  if (!rows.all_finite()) throw FormatError("codebook file: non-finite codevector component");
  return {Codebook(std::move(rows)), static_cast<Metric>(tag)};
}

inline void save_codebook(const Codebook& cb, Metric metric, const std::filesystem::path& path) {
  write_file(path, serialize_codebook(cb, metric));
}

inline StoredCodebook load_codebook(const std::filesystem::path& path) {
  return deserialize_codebook(read_file(path));
}

inline Bytes serialize_encoded(const EncodedStream& es) {
  detail::ByteWriter w;
  w.magic("VQEN");
  w.u32(kEncodedFormatVersion);
  w.u32(es.codebook_size);
  w.u32(es.dimension);
  w.u64(es.indices.size());
  for (CellIndex i : es.indices) w.u32(i);
  return w.take();
}

inline EncodedStream deserialize_encoded(std::span<const std::uint8_t> bytes) {
  constexpr std::string_view what = "encoded file";
  detail::ByteReader r(bytes, what);
  r.expect_magic("VQEN");
  detail::check_version(r.u32(), kEncodedFormatVersion, what);
  EncodedStream es;
  es.codebook_size = r.u32();
  es.dimension = r.u32();
  const std::uint64_t count = r.u64();
  if (count > r.remaining() / 4)
    throw TruncatedError("encoded file: truncated (" + std::to_string(count) +
                         " indices declared, room for " + std::to_string(r.remaining() / 4) + ")");
  if (r.remaining() != count * 4)
    throw FormatError("encoded file: " + std::to_string(r.remaining() - count * 4) +
                      " trailing bytes after payload");
  es.indices.resize(count);
  for (std::uint64_t j = 0; j < count; ++j) {
    const CellIndex c = r.u32();
    if (c >= es.codebook_size)
      throw CorruptStreamError("encoded file: index " + std::to_string(c) + " at position " +
                               std::to_string(j) + " exceeds codebook size " +
                               std::to_string(es.codebook_size));
    es.indices[j] = c;
  }
  return es;
}

inline void save_encoded(const EncodedStream& es, const std::filesystem::path& path) {
  write_file(path, serialize_encoded(es));
}

inline EncodedStream load_encoded(const std::filesystem::path& path) {
  return deserialize_encoded(read_file(path));
}

}  // namespace vq
