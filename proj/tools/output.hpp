#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace sigate::cli {

/// Shortest round-trip decimal form, independent of the locale.
std::string format_number(double x);

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

void write_json(const std::filesystem::path& path, const nlohmann::json& value);

/// Rows of a CSV written by write_csv, header excluded.
std::vector<std::vector<double>> read_csv(const std::filesystem::path& path,
                                          std::vector<std::string>* header = nullptr);

nlohmann::json read_json(const std::filesystem::path& path);

/// Raised when a file cannot be written or read; maps to exit code 3.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace sigate::cli
