#include "config.hpp"

#include "porobiot/bench.hpp"
#include "porobiot/errors.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cctype>
#include <regex>

namespace porobiot::cli {

const char* to_string(Source s)
{
    switch (s) {
    case Source::Default: return "default";
    case Source::File: return "file";
    case Source::Override: return "override";
    }
    return "?";
}

Config Config::defaults()
{
    Config c;
    const std::vector<std::pair<std::string, std::string>> table = {
        // Material scalars; "auto" keeps the problem's preset material.
        {"material.alpha", "auto"},
        {"material.mu", "auto"},
        {"material.lambda", "auto"},
        {"material.biot_modulus", "auto"},
        {"material.permeability", "auto"},
        {"material.nu_f", "auto"},
        {"material.rho_f", "auto"},
        {"material.gravity_x", "auto"},
        {"material.gravity_y", "auto"},
        {"laws.case", "linear"},
        {"problem.kind", "manufactured"},
        {"problem.h", "0.0625"},
        {"problem.nx", "0"},
        {"problem.ny", "0"},
        {"problem.tau", "0.25"},
        {"problem.steps", "0"},
        {"problem.refinements", "1"},
        {"problem.mandel_a", "100"},
        {"problem.mandel_b", "10"},
        {"problem.load", "1e4"},
        {"problem.probe_x", "25"},
        {"problem.probe_y", "5"},
        {"problem.axis", "h"},
        {"problem.values", "0.125,0.0625,0.03125"},
        {"scheme.kind", "splitting"},
        {"scheme.L1", "theorem-safe"},
        {"scheme.L2", "theorem-safe"},
        {"scheme.tol", "1e-8"},
        {"scheme.max_iter", "500"},
        {"scheme.divergence_factor", "1e6"},
        {"solver.linear", "direct"},
        {"solver.gmres_restart", "50"},
        {"solver.gmres_tol", "1e-10"},
        {"solver.gmres_max_iter", "1000"},
        {"solver.threads", "0"},
        {"output.dir", "out"},
        {"output.trace", "true"},
        {"output.timings", "false"},
    };
    for (const auto& [k, v] : table) c.entries_[k] = Entry{v, Source::Default};
    return c;
}

void Config::load_file(const std::string& path)
{
    boost::property_tree::ptree tree;
    try {
        boost::property_tree::read_ini(path, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigurationError("cannot read config '" + path + "': " + e.message());
    }
    for (const auto& [section, body] : tree) {
        if (body.empty()) throw ConfigurationError("config '" + path + "': key '" + section + "' outside a section");
        for (const auto& [key, value] : body) set(section + "." + key, value.get_value<std::string>(), Source::File);
    }
}

void Config::apply_override(const std::string& assignment)
{
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigurationError("override '" + assignment + "' is not key=value");
    set(assignment.substr(0, eq), assignment.substr(eq + 1), Source::Override);
}

void Config::set(const std::string& key, const std::string& value, Source source)
{
    auto it = entries_.find(key);
    if (it == entries_.end()) throw ConfigurationError("unknown config key '" + key + "'");
    if (source < it->second.source) return;
    it->second = Entry{value, source};
}

bool Config::has(const std::string& key) const { return entries_.count(key) != 0; }

const Config::Entry& Config::entry(const std::string& key) const
{
    auto it = entries_.find(key);
    if (it == entries_.end()) throw ConfigurationError("unknown config key '" + key + "'");
    return it->second;
}

const std::string& Config::str(const std::string& key) const { return entry(key).value; }

double Config::real(const std::string& key) const { return parse_real(key, str(key)); }

int Config::integer(const std::string& key) const
{
    const double v = real(key);
    if (v != static_cast<double>(static_cast<long long>(v)) || std::abs(v) > 1e9)
        throw ConfigurationError(key + ": expected an integer, got '" + str(key) + "'");
    return static_cast<int>(v);
}

bool Config::flag(const std::string& key) const
{
    std::string v = str(key);
    std::transform(v.begin(), v.end(), v.begin(), [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigurationError(key + ": expected a boolean, got '" + str(key) + "'");
}

Source Config::source(const std::string& key) const { return entry(key).source; }

nlohmann::json Config::to_json() const
{
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [k, e] : entries_) j[k] = {{"value", e.value}, {"source", to_string(e.source)}};
    return j;
}

double parse_real(const std::string& key, const std::string& text)
{
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        throw ConfigurationError(key + ": expected a number, got '" + text + "'");
    }
    while (used < text.size() && std::isspace(static_cast<unsigned char>(text[used]))) ++used;
    if (used != text.size()) throw ConfigurationError(key + ": expected a number, got '" + text + "'");
    return v;
}

std::vector<double> parse_grid(const std::string& key, const std::string& text)
{
    static const std::regex spaced(R"(\s*(logspace|linspace)\(\s*([^,]+),\s*([^,]+),\s*([^)]+)\)\s*)");
    std::smatch m;
    if (std::regex_match(text, m, spaced)) {
        const double a = parse_real(key, m[2]);
        const double b = parse_real(key, m[3]);
        const double n = parse_real(key, m[4]);
        if (n < 1 || n != static_cast<double>(static_cast<int>(n))) throw ConfigurationError(key + ": grid size must be a positive integer");
        if (m[1] == "logspace") return logspace(a, b, static_cast<int>(n));
        std::vector<double> v(static_cast<std::size_t>(n));
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = n == 1 ? a : a + (b - a) * static_cast<double>(i) / (n - 1);
        return v;
    }
    std::vector<double> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto comma = text.find(',', start);
        const auto piece = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        out.push_back(parse_real(key, piece));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

bool is_numeric(const std::string& text)
{
    if (text.rfind("logspace(", 0) == 0 || text.rfind("linspace(", 0) == 0) return true;
    try {
        parse_grid("", text);
        return true;
    } catch (const ConfigurationError&) {
        return false;
    }
}

} // namespace porobiot::cli
