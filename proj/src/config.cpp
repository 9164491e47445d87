#include "ihsp/config.hpp"
#include "ihsp/csv.hpp"

#include <fstream>
#include <sstream>

namespace ihsp {

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

Config Config::parse(const std::string& text, const std::string& origin)
{
    Config cfg;
    cfg.origin_ = origin;
    std::istringstream is(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::string where = origin + ":" + std::to_string(lineno);
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(where + ": unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty()) throw ConfigError(where + ": empty section name");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw ConfigError(where + ": empty key");
        const std::string full = section.empty() ? key : section + "." + key;
        if (cfg.values_.count(full)) throw ConfigError(where + ": duplicate key '" + full + "'");
        cfg.values_[full] = trim(line.substr(eq + 1));
    }
    return cfg;
}

Config Config::load(const std::string& path)
{
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read config file '" + path + "'");
    std::stringstream ss;
    ss << is.rdbuf();
    return parse(ss.str(), path);
}

std::optional<std::string> Config::get(const std::string& key) const
{
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second;
}

std::string Config::get_or(const std::string& key, const std::string& fallback) const
{
    return get(key).value_or(fallback);
}

double Config::number(const std::string& key, double fallback) const
{
    auto v = get(key);
    if (!v) return fallback;
    try {
        return parse_number(*v);
    } catch (const IoError&) {
        throw ConfigError(origin_ + ": '" + key + "' is not a number: '" + *v + "'");
    }
}

int Config::integer(const std::string& key, int fallback) const
{
    const double d = number(key, fallback);
    if (d != static_cast<double>(static_cast<int>(d))) throw ConfigError(origin_ + ": '" + key + "' must be an integer");
    return static_cast<int>(d);
}

std::vector<std::string> Config::list(const std::string& key) const
{
    std::vector<std::string> out;
    auto v = get(key);
    if (!v) return out;
    std::istringstream is(*v);
    std::string item;
    while (std::getline(is, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::vector<double> Config::numbers(const std::string& key) const
{
    std::vector<double> out;
    for (const auto& s : list(key)) {
        try {
            out.push_back(parse_number(s));
        } catch (const IoError&) {
            throw ConfigError(origin_ + ": '" + key + "' holds a non-numeric entry '" + s + "'");
        }
    }
    return out;
}

void Config::require_known(const std::set<std::string>& allowed) const
{
    for (const auto& [k, v] : values_)
        if (!allowed.count(k)) throw ConfigError(origin_ + ": unknown key '" + k + "'");
}

}  // namespace ihsp
