#include "coxql/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "coxql/dataset.hpp"  // IoError

namespace coxql {

namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return s;
}

}  // namespace

ConfigMap ConfigMap::parse(std::string_view text) {
    ConfigMap cfg;
    std::istringstream is{std::string(text)};
    std::string line;
    while (std::getline(is, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::string t = trim(line);
        if (t.empty()) continue;
        auto eq = t.find('=');
        if (eq == std::string::npos) continue;
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        if (!key.empty()) cfg.values[key] = value;
    }
    return cfg;
}

ConfigMap ConfigMap::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

std::optional<std::string> ConfigMap::get(const std::string& key) const {
    auto it = values.find(key);
    if (it == values.end()) return std::nullopt;
    return it->second;
}

std::string ConfigMap::get_or(const std::string& key, std::string def) const {
    auto v = get(key);
    return v ? *v : std::move(def);
}

bool ConfigMap::get_bool(const std::string& key, bool def) const {
    auto v = get(key);
    if (!v) return def;
    std::string s = lower(*v);
    if (s == "on" || s == "true" || s == "1" || s == "yes") return true;
    if (s == "off" || s == "false" || s == "0" || s == "no") return false;
    return def;
}

int ConfigMap::get_int(const std::string& key, int def) const {
    auto v = get(key);
    if (!v) return def;
    try {
        return std::stoi(*v);
    } catch (...) {
        return def;
    }
}

double ConfigMap::get_double(const std::string& key, double def) const {
    auto v = get(key);
    if (!v) return def;
    try {
        return std::stod(*v);
    } catch (...) {
        return def;
    }
}

}  // namespace coxql
