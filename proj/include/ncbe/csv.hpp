#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

namespace ncbe {

struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Shortest representation that round-trips the exact double.
inline std::string fmt_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

/// Four-significant-digit presentation column.
inline std::string fmt_sig4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw io_error("cannot create directory " + path.parent_path().string());
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw io_error("cannot open " + path.string() + " for writing");
  os << content;
  if (!os) throw io_error("write failed for " + path.string());
}

/// Flat key=value echo of every effective setting, including the defaults
/// substituted for parameters the reference tables leave unstated.
class Provenance {
 public:
  void add(const std::string& key, const std::string& value, bool is_default = false) {
    lines_ += key + "=" + value + (is_default ? "  # default (unstated in the reference)" : "") +
              "\n";
  }
  void add(const std::string& key, double value, bool is_default = false) {
    add(key, fmt_double(value), is_default);
  }
  const std::string& text() const { return lines_; }

 private:
  std::string lines_;
};

}  // namespace ncbe
