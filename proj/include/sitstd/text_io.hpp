#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace sitstd {

// Ordered `key = value` document. Blank lines and lines starting with `#` are
// ignored; whitespace around keys and values is trimmed.
class KeyValueDoc {
 public:
  static KeyValueDoc parse(std::string_view text);

  void set(std::string key, std::string value);
  std::optional<std::string> find(std::string_view key) const;
  std::string require(std::string_view key) const;
  const std::vector<std::pair<std::string, std::string>>& entries() const noexcept { return entries_; }
  std::string str() const;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

// Shortest round-trip decimal text ("%.17g"), locale independent.
std::string format_double(double v);
double parse_double(std::string_view text, std::string_view what);
long long parse_integer(std::string_view text, std::string_view what);

std::string_view trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

}  // namespace sitstd
