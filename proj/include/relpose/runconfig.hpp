#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace relpose::cli {

// Flat key=value configuration with '#' comments. Unknown keys are rejected;
// command-line flag overrides win over file values.
class RunConfig {
  public:
    static RunConfig from_file(const std::string& path);
    static RunConfig from_string(const std::string& text);
    RunConfig() = default;

    void set(const std::string& key, const std::string& value);  // validates the key

    bool has(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
    std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<std::string> get_list(const std::string& key,
                                      const std::vector<std::string>& fallback) const;

    const std::map<std::string, std::string>& entries() const { return values_; }

    static const std::vector<std::string>& known_keys();

  private:
    std::map<std::string, std::string> values_;
};

}  // namespace relpose::cli
