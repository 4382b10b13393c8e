#pragma once

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

namespace ehrse::csv {

/// Decimal form with 17 significant digits; parses back to the
/// identical double.
std::string format(double value);

double parse_double(std::string_view text);

/// Minimal writer: fields are emitted verbatim and joined with commas, so
/// callers only pass numbers and identifiers.
class Writer {
 public:
  explicit Writer(const std::filesystem::path& path);

  Writer& header(std::initializer_list<std::string_view> names);
  Writer& row(const std::vector<std::string>& fields);

  template <class... Ts>
  Writer& values(const Ts&... fields) {
    return row({cell(fields)...});
  }

  /// Flushes and throws std::runtime_error if anything failed to write.
  void close();

 private:
  static std::string cell(double v) { return format(v); }
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(std::string_view s) { return std::string(s); }
  static std::string cell(const char* s) { return s; }
  template <class T>
  static std::string cell(const T& v) {
    return std::to_string(v);
  }

  std::filesystem::path path_;
  std::ofstream out_;
};

/// Reads a comma-separated file into rows of raw fields (header included).
std::vector<std::vector<std::string>> read(const std::filesystem::path& path);

}  // namespace ehrse::csv
