#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace porobiot::cli {

// Where a resolved value came from; later layers win.
enum class Source { Default, File, Override };

const char* to_string(Source s);

/// Flat "section.key" configuration with three precedence layers.
class Config {
  public:
    /// Every known key with its default value.
    static Config defaults();

    /// INI file with sections [material] [laws] [problem] [scheme] [solver]
    /// [output]. Throws ConfigurationError on unreadable files or unknown keys.
    void load_file(const std::string& path);

    /// `section.key=value`.
    void apply_override(const std::string& assignment);
    void set(const std::string& key, const std::string& value, Source source);

    [[nodiscard]] bool has(const std::string& key) const;
    [[nodiscard]] const std::string& str(const std::string& key) const;
    [[nodiscard]] double real(const std::string& key) const;
    [[nodiscard]] int integer(const std::string& key) const;
    [[nodiscard]] bool flag(const std::string& key) const;
    [[nodiscard]] Source source(const std::string& key) const;
    // "auto" leaves the preset value in place.
    [[nodiscard]] bool is_auto(const std::string& key) const { return str(key) == "auto"; }

    [[nodiscard]] nlohmann::json to_json() const;

  private:
    struct Entry {
        std::string value;
        Source source = Source::Default;
    };
    const Entry& entry(const std::string& key) const;
    std::map<std::string, Entry> entries_;
};

double parse_real(const std::string& key, const std::string& text);

/// "logspace(a,b,n)", "linspace(a,b,n)", a comma list, or a single number.
std::vector<double> parse_grid(const std::string& key, const std::string& text);

/// True when text is a number or a grid expression rather than a name.
bool is_numeric(const std::string& text);

} // namespace porobiot::cli
