#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace coxql {

/// Flat `key = value` configuration, `#` starts a comment. Keys are
/// namespaced with dots (backend.*, repair.*).
struct ConfigMap {
    std::map<std::string, std::string> values;

    static ConfigMap load_file(const std::string& path);
    static ConfigMap parse(std::string_view text);

    bool has(const std::string& key) const { return values.count(key) > 0; }
    std::optional<std::string> get(const std::string& key) const;
    std::string get_or(const std::string& key, std::string def) const;
    bool get_bool(const std::string& key, bool def) const;
    int get_int(const std::string& key, int def) const;
    double get_double(const std::string& key, double def) const;
};

}  // namespace coxql
