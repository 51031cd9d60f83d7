#include "sdgzsl/binary_io.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>

namespace sdgzsl::io {

namespace {

template <typename UInt>
void put_le(std::string& out, UInt v) {
  for (std::size_t i = 0; i < sizeof(UInt); ++i) {
    out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
}

template <typename UInt>
UInt get_le(const unsigned char* p) {
  UInt v = 0;
  for (std::size_t i = 0; i < sizeof(UInt); ++i) {
    v |= static_cast<UInt>(p[i]) << (8 * i);
  }
  return v;
}

constexpr std::size_t kHeaderBytes = 16;

}  // namespace

void put_u64_le(std::string& out, std::uint64_t v) { put_le(out, v); }
void put_f32_le(std::string& out, float v) { put_le(out, std::bit_cast<std::uint32_t>(v)); }
void put_f64_le(std::string& out, double v) { put_le(out, std::bit_cast<std::uint64_t>(v)); }

std::uint64_t get_u64_le(const unsigned char* p) { return get_le<std::uint64_t>(p); }
float get_f32_le(const unsigned char* p) { return std::bit_cast<float>(get_le<std::uint32_t>(p)); }
double get_f64_le(const unsigned char* p) { return std::bit_cast<double>(get_le<std::uint64_t>(p)); }

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError(path.string() + ": cannot open file");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(path.string() + ": cannot open for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(path.string() + ": write failed");
}

void write_matrix_f32(const std::filesystem::path& path, const Matrix& m) {
  std::string bytes;
  bytes.reserve(kHeaderBytes + 4 * static_cast<std::size_t>(m.size()));
  put_u64_le(bytes, static_cast<std::uint64_t>(m.rows()));
  put_u64_le(bytes, static_cast<std::uint64_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) put_f32_le(bytes, static_cast<float>(m(r, c)));
  }
  write_file(path, bytes);
}

Matrix read_matrix_f32(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (bytes.size() < kHeaderBytes) {
    throw LoadError(path.string() + ": truncated header at offset 0: expected " +
                    std::to_string(kHeaderBytes) + " bytes, got " + std::to_string(bytes.size()));
  }
  const std::uint64_t rows = get_u64_le(p);
  const std::uint64_t cols = get_u64_le(p + 8);
  const std::uint64_t expected = kHeaderBytes + 4 * rows * cols;
  if (cols != 0 && rows > (bytes.size() / 4) / cols + 1) {
    throw LoadError(path.string() + ": implausible shape " + shape_str(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols)) +
                    " for " + std::to_string(bytes.size()) + " bytes");
  }
  if (bytes.size() != expected) {
    throw LoadError(path.string() + ": byte count mismatch at offset " + std::to_string(kHeaderBytes) +
                    ": expected " + std::to_string(expected) + " bytes, got " + std::to_string(bytes.size()));
  }
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  std::size_t off = kHeaderBytes;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c, off += 4) {
      const float v = get_f32_le(p + off);
      if (!std::isfinite(v)) {
        throw LoadError(path.string() + ": non-finite value at offset " + std::to_string(off) +
                        " (row " + std::to_string(r) + ", col " + std::to_string(c) + ")");
      }
      m(r, c) = static_cast<double>(v);
    }
  }
  return m;
}

void write_labels_u32(const std::filesystem::path& path, const std::vector<std::uint32_t>& labels) {
  std::string bytes;
  bytes.reserve(4 * labels.size());
  for (auto v : labels) put_le(bytes, v);
  write_file(path, bytes);
}

std::vector<std::uint32_t> read_labels_u32(const std::filesystem::path& path, std::size_t expected_count) {
  const std::string bytes = read_file(path);
  if (bytes.size() != 4 * expected_count) {
    throw LoadError(path.string() + ": byte count mismatch at offset 0: expected " +
                    std::to_string(4 * expected_count) + " bytes, got " + std::to_string(bytes.size()));
  }
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  std::vector<std::uint32_t> labels(expected_count);
  for (std::size_t i = 0; i < expected_count; ++i) labels[i] = get_le<std::uint32_t>(p + 4 * i);
  return labels;
}

}  // namespace sdgzsl::io
