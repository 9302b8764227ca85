#include "ris_sensing/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>

#include "ris_sensing/errors.hpp"

namespace ris {

namespace {

std::string trim(const std::string& s)
{
    const auto b = std::find_if_not(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
    const auto e = std::find_if_not(s.rbegin(), s.rend(), [](unsigned char c) { return std::isspace(c); }).base();
    return b < e ? std::string(b, e) : std::string();
}

double parse_real(const std::string& key, const std::string& value)
{
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used == value.size()) return v;
    } catch (const std::exception&) {
    }
    throw UsageError("config key '" + key + "': cannot parse '" + value + "' as a number");
}

Index parse_count(const std::string& key, const std::string& value)
{
    long long v = 0;
    const auto* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, v);
    if (ec != std::errc() || ptr != end) {
        throw UsageError("config key '" + key + "': cannot parse '" + value + "' as an integer");
    }
    return static_cast<Index>(v);
}

std::string format_real(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct Field {
    std::function<void(ScenarioConfig&, const std::string&, const std::string&)> set;
    std::function<std::string(const ScenarioConfig&)> get;
};

template <Index ScenarioConfig::*Member>
Field count_field()
{
    return {[](ScenarioConfig& c, const std::string& k, const std::string& v) { c.*Member = parse_count(k, v); },
            [](const ScenarioConfig& c) { return std::to_string(c.*Member); }};
}

template <double ScenarioConfig::*Member>
Field real_field()
{
    return {[](ScenarioConfig& c, const std::string& k, const std::string& v) { c.*Member = parse_real(k, v); },
            [](const ScenarioConfig& c) { return format_real(c.*Member); }};
}

const std::vector<std::pair<std::string, Field>>& fields()
{
    static const std::vector<std::pair<std::string, Field>> table = {
        {"L", count_field<&ScenarioConfig::L>()},
        {"N_y", count_field<&ScenarioConfig::N_y>()},
        {"N_z", count_field<&ScenarioConfig::N_z>()},
        {"Q", count_field<&ScenarioConfig::Q>()},
        {"M", count_field<&ScenarioConfig::M>()},
        {"K", count_field<&ScenarioConfig::K>()},
        {"delta_f",
         {[](ScenarioConfig& c, const std::string& k, const std::string& v) {
              c.delta_f = parse_real(k, v);
              c.T_s = 1.0 / c.delta_f;
          },
          [](const ScenarioConfig& c) { return format_real(c.delta_f); }}},
        {"T_s", real_field<&ScenarioConfig::T_s>()},
        {"lambda", real_field<&ScenarioConfig::lambda>()},
        {"d1", real_field<&ScenarioConfig::d1>()},
        {"d2", real_field<&ScenarioConfig::d2>()},
        {"P_t", real_field<&ScenarioConfig::P_t>()},
        {"G1", real_field<&ScenarioConfig::G1>()},
        {"G2", real_field<&ScenarioConfig::G2>()},
        {"F1sq", real_field<&ScenarioConfig::F1sq>()},
        {"F2sq", real_field<&ScenarioConfig::F2sq>()},
        {"d_x", real_field<&ScenarioConfig::d_x>()},
        {"d_y", real_field<&ScenarioConfig::d_y>()},
        {"sigma_rcs", real_field<&ScenarioConfig::sigma_rcs>()},
        {"codebook",
         {[](ScenarioConfig& c, const std::string&, const std::string& v) { c.codebook = parse_codebook_kind(v); },
          [](const ScenarioConfig& c) { return to_string(c.codebook); }}},
    };
    return table;
}

} // namespace

void apply_setting(ScenarioConfig& cfg, const std::string& key, const std::string& value)
{
    for (const auto& [name, field] : fields()) {
        if (name == key) {
            field.set(cfg, key, trim(value));
            return;
        }
    }
    throw UsageError("unknown config key '" + key + "'");
}

std::pair<std::string, std::string> parse_assignment(const std::string& text)
{
    const auto eq = text.find('=');
    if (eq == std::string::npos) {
        throw UsageError("expected key=value, got '" + text + "'");
    }
    std::string key = trim(text.substr(0, eq));
    std::string value = trim(text.substr(eq + 1));
    if (key.empty() || value.empty()) {
        throw UsageError("expected key=value, got '" + text + "'");
    }
    return {std::move(key), std::move(value)};
}

void load_config_file(ScenarioConfig& cfg, const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw UsageError("cannot open config file '" + path + "'");
    }
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        line = trim(line);
        if (line.empty()) continue;
        try {
            const auto [key, value] = parse_assignment(line);
            apply_setting(cfg, key, value);
        } catch (const UsageError& e) {
            throw UsageError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
}

std::vector<std::pair<std::string, std::string>> config_entries(const ScenarioConfig& cfg)
{
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& [name, field] : fields()) {
        out.emplace_back(name, field.get(cfg));
    }
    return out;
}

const std::vector<std::string>& config_keys()
{
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k;
        for (const auto& [name, field] : fields()) k.push_back(name);
        return k;
    }();
    return keys;
}

} // namespace ris
