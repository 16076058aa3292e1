#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace fincon {

// Flat key=value configuration.  '#' starts a comment, values keep inner
// whitespace, later assignments win.  Command-line overrides are merged on
// top of the file; CONNECTOME_SEED (environment) overrides the root seed.
class RunConfig {
public:
    RunConfig() = default;

    static RunConfig from_file(const std::filesystem::path& path);
    static RunConfig from_lines(const std::vector<std::string>& lines,
                                const std::string& origin = "<memory>");

    void set(const std::string& key, const std::string& value);
    bool has(const std::string& key) const;

    std::string get_str(const std::string& key, const std::string& fallback) const;
    long get_long(const std::string& key, long fallback) const;
    double get_double(const std::string& key, double fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::uint64_t get_seed(const std::string& key, std::uint64_t fallback) const;
    std::vector<std::string> get_list(const std::string& key) const;  // comma split

    // required variants: throw ConfigError when missing
    std::string require_str(const std::string& key) const;

    const std::map<std::string, std::string>& entries() const { return entries_; }

private:
    std::map<std::string, std::string> entries_;
};

}  // namespace fincon
