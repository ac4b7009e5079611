#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace vibroloc::io {

// Minimal CSV helpers. Fields are plain tokens (no quoting); writers reject
// separators inside fields, readers trim trailing CR.
std::vector<std::string> split_csv_line(const std::string& line);
std::string format_double(double v);  // %.17g, round-trip exact

double parse_double(const std::string& field, const std::string& context);
long parse_long(const std::string& field, const std::string& context);

// Standard base64 with padding.
std::string base64_encode(const std::uint8_t* data, std::size_t size);
std::vector<std::uint8_t> base64_decode(const std::string& text);

// Row-major f64 little-endian blob of a matrix, and back.
std::string encode_matrix(const Eigen::MatrixXd& m);
Eigen::MatrixXd decode_matrix(const std::string& b64, Eigen::Index rows,
                              Eigen::Index cols, const std::string& context);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace vibroloc::io
