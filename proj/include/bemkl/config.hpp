// Flat "key = value" configuration files.
#ifndef BEMKL_CONFIG_HPP
#define BEMKL_CONFIG_HPP

#include <cstddef>
#include <filesystem>
#include <istream>
#include <string>
#include <vector>

namespace bemkl {

struct ConfigEntry {
  std::string key;  // underscores folded to dashes
  std::string value;
  std::size_t line = 0;
};

/// One "key = value" per line; '#' starts a comment line; values may be
/// wrapped in double quotes. Throws FormatError on a malformed line or a
/// repeated key.
std::vector<ConfigEntry> parse_config(std::istream& in, const std::string& source = "<config>");
std::vector<ConfigEntry> load_config(const std::filesystem::path& path);

}  // namespace bemkl

#endif  // BEMKL_CONFIG_HPP
