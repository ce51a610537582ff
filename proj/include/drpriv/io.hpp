#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace drpriv {

// 8-bit grayscale image as loaded from disk.
struct GrayImage {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<std::uint8_t> pixels;  // row-major, height*width
};

// Binary PGM (P5), maxval 255 only. Throws std::runtime_error with the
// file path in the message on any structural problem.
GrayImage read_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const GrayImage& img);

// Numeric formatting used across text artifacts: %.9g for CSV payloads,
// %.17g / shortest-round-trip where exact double round-trip is required.
std::string format_g9(double v);
std::string format_g17(double v);
std::string format_exact(double v);  // shortest string that parses back bit-identically

// Strict full-string parsers; throw std::invalid_argument on anything
// that is not exactly one value.
double parse_double_strict(const std::string& s);
std::uint64_t parse_u64_strict(const std::string& s);

// Split a CSV line on commas. No quoting support: the artifact formats
// this tool emits never contain commas inside fields.
std::vector<std::string> split_csv_line(const std::string& line);

std::string join_csv(const std::vector<std::string>& fields);

// Read a whole text file; throws std::runtime_error if unreadable.
std::string read_text_file(const std::filesystem::path& path);

// Write text atomically: write to <path>.tmp in the same directory,
// then rename over the target.
void write_text_file_atomic(const std::filesystem::path& path, const std::string& content);

// FNV-1a 64-bit over raw bytes.
std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace drpriv
