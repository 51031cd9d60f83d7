#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sdgzsl/tensor.hpp"

namespace sdgzsl::io {

// Binary matrix layout, all little-endian:
//   u64 rows, u64 cols, then rows*cols f32 values in row-major order.
// Label files are a bare sequence of u32, one per row; the row count comes
// from the dataset header.

void write_matrix_f32(const std::filesystem::path& path, const Matrix& m);

/// Reads and widens to f64. Throws LoadError on short reads, trailing bytes,
/// or non-finite values (the message names the file, byte offset and row).
Matrix read_matrix_f32(const std::filesystem::path& path);

void write_labels_u32(const std::filesystem::path& path, const std::vector<std::uint32_t>& labels);
std::vector<std::uint32_t> read_labels_u32(const std::filesystem::path& path, std::size_t expected_count);

void put_u64_le(std::string& out, std::uint64_t v);
void put_f32_le(std::string& out, float v);
void put_f64_le(std::string& out, double v);
std::uint64_t get_u64_le(const unsigned char* p);
float get_f32_le(const unsigned char* p);
double get_f64_le(const unsigned char* p);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& bytes);

}  // namespace sdgzsl::io
