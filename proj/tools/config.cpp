#include "config.hpp"

#include <fstream>

namespace sigate::cli {

ConfigReader::ConfigReader(json source, std::string path)
    : source_(std::move(source)), path_(std::move(path)) {
    if (source_.is_null()) source_ = json::object();
    if (!source_.is_object()) {
        throw ValidationError("config " + (path_.empty() ? std::string("root") : "'" + path_ + "'") +
                              " must be a JSON object");
    }
}

bool ConfigReader::has(const std::string& key) {
    used_.insert(key);
    return source_.contains(key) && !source_.at(key).is_null();
}

ConfigReader ConfigReader::child(const std::string& key) {
    return ConfigReader(has(key) ? source_.at(key) : json::object(), where(key));
}

void ConfigReader::finish() const {
    for (const auto& [key, value] : source_.items()) {
        if (!used_.count(key)) throw ValidationError("unknown config field '" + where(key) + "'");
    }
}

std::string ConfigReader::where(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
}

json load_config(const std::optional<std::string>& path) {
    if (!path) return json::object();
    std::ifstream in(*path);
    if (!in) throw ValidationError("cannot open config file '" + *path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError("config file '" + *path + "' is not valid JSON: " + e.what());
    }
}

}  // namespace sigate::cli
