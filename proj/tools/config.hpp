#pragma once

// Strict reading of JSON run configs: every key read is recorded in the
// resolved config, and keys nobody asked for are rejected.

#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace sigate::cli {

using nlohmann::json;

/// Bad flags or config contents; maps to exit code 2.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigReader {
public:
    explicit ConfigReader(json source, std::string path = "");

    template <class T>
    T get(const std::string& key, const T& fallback) {
        const T value = has(key) ? convert<T>(key) : fallback;
        resolved_[key] = value;
        return value;
    }

    template <class T>
    std::optional<T> optional(const std::string& key) {
        if (!has(key)) return std::nullopt;
        const T value = convert<T>(key);
        resolved_[key] = value;
        return value;
    }

    bool has(const std::string& key);
    /// Nested object; absent keys give an empty reader. Call finish() on it.
    ConfigReader child(const std::string& key);
    /// Stores a nested resolved object under key.
    void put(const std::string& key, json value) { resolved_[key] = std::move(value); }
    /// Throws ValidationError naming any key that was never read.
    void finish() const;

    const json& resolved() const { return resolved_; }
    std::string where(const std::string& key) const;

private:
    template <class T>
    T convert(const std::string& key) {
        try {
            return source_.at(key).get<T>();
        } catch (const json::exception&) {
            throw ValidationError("config field '" + where(key) + "' has the wrong type");
        }
    }

    json source_;
    std::string path_;
    std::set<std::string> used_;
    json resolved_ = json::object();
};

/// Parses a config file; a missing path gives an empty object.
json load_config(const std::optional<std::string>& path);

}  // namespace sigate::cli
