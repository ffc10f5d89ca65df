#ifndef CDCNN_TEXTIO_HPP_
#define CDCNN_TEXTIO_HPP_

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace cdcnn {

// Shortest decimal form that parses back to the identical double.
std::string format_double(double value);

// Strict parse of a whole token; nullopt-like failure is reported by throwing
// FormatError with `context` prepended.
double parse_double(std::string_view token, std::string_view context);
long long parse_int(std::string_view token, std::string_view context);

std::vector<std::string_view> split(std::string_view text, char delimiter);
std::string_view trim(std::string_view text);

// Writes a file atomically enough for single-owner outputs; throws IoError with
// the path on failure.
void write_text_file(const std::filesystem::path& path, std::string_view contents);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace cdcnn

#endif  // CDCNN_TEXTIO_HPP_
