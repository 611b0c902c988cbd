#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "kmslab/errors.hpp"

namespace kmslab {

/// 17-significant-digit decimal rendering; round-trips IEEE doubles.
inline std::string fmt17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// CSV table with fixed column order, written atomically (temp + rename).
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header) {
    append_line(header);
  }

  void row(const std::vector<std::string>& cells) { append_line(cells); }

  void write(const std::string& path) const {
    namespace fs = std::filesystem;
    fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    fs::path tmp = target;
    tmp += ".tmp";
    {
      std::ofstream out(tmp, std::ios::trunc);
      if (!out) throw InvariantError("cannot open output file " + tmp.string());
      out << body_;
      if (!out.good())
        throw InvariantError("write failure for " + tmp.string());
    }
    fs::rename(tmp, target);
  }

 private:
  void append_line(const std::vector<std::string>& cells) {
    std::ostringstream line;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) line << ',';
      line << cells[i];
    }
    line << '\n';
    body_ += line.str();
  }

  std::string body_;
};

}  // namespace kmslab
