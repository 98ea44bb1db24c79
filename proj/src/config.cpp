#include "bemkl/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "bemkl/error.hpp"

namespace bemkl {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::vector<ConfigEntry> parse_config(std::istream& in, const std::string& source) {
  std::vector<ConfigEntry> out;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = trim(line);
    if (text.empty() || text.front() == '#') continue;
    const auto eq = text.find('=');
    const auto where = source + ":" + std::to_string(line_no);
    if (eq == std::string::npos) throw FormatError(where + ": expected 'key = value'");
    ConfigEntry entry;
    entry.key = trim(text.substr(0, eq));
    entry.value = trim(text.substr(eq + 1));
    entry.line = line_no;
    if (entry.key.empty()) throw FormatError(where + ": empty key");
    std::replace(entry.key.begin(), entry.key.end(), '_', '-');
    if (entry.value.size() >= 2 && entry.value.front() == '"' && entry.value.back() == '"') {
      entry.value = entry.value.substr(1, entry.value.size() - 2);
    }
    if (!seen.insert(entry.key).second) throw FormatError(where + ": key '" + entry.key + "' repeated");
    out.push_back(std::move(entry));
  }
  return out;
}

std::vector<ConfigEntry> load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open config file " + path.string());
  return parse_config(in, path.string());
}

}  // namespace bemkl
