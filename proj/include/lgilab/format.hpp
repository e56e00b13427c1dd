#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace lgilab {

// Shortest decimal that round-trips to the same double; locale independent.
std::string format_shortest(double value);

// 17 significant digits (printf "%.17g"), as used by the dataset CSV format.
std::string format_fixed17(double value);

// Locale-independent parse accepting the outputs of both formatters plus
// "nan", "inf" and "-inf". Throws PreconditionError on malformed input.
double parse_double(std::string_view text);

// Writes `contents` to a sibling temporary file and renames it over `path`,
// creating parent directories as needed.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

}  // namespace lgilab
