/**
 * @file csv.hpp
 * @brief Small CSV helpers shared by the file formats.
 */
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lakedo::csv {

/// 17 significant digits, "%.17g".
std::string format_double(double value);
std::string format_optional(const std::optional<double>& value);

std::vector<std::string_view> split_line(std::string_view line);

/// Strict parse; throws DomainError naming `context` on failure.
double parse_double(std::string_view cell, std::string_view context);
std::optional<double> parse_optional(std::string_view cell, std::string_view context);

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Index of `column` in the header, or nullopt.
    std::optional<std::size_t> find(std::string_view column) const;
};

Table parse_table(const std::string& text);
Table read_table(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);

/// Write via a temporary sibling and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace lakedo::csv
