#pragma once
// Minimal CSV plumbing: comma-separated, no quoting (none of the formats
// need it), `#`-prefixed comment lines, and line-numbered parse errors.

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace micfit {

class CsvError : public std::runtime_error {
 public:
  CsvError(const std::string& path, int line, const std::string& what)
      : std::runtime_error(path + ":" + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

struct CsvRow {
  int line = 0;
  std::vector<std::string> fields;
};

class CsvReader {
 public:
  explicit CsvReader(const std::string& path) : path_(path), in_(path) {
    if (!in_) throw std::runtime_error("cannot open " + path);
  }

  const std::string& path() const { return path_; }

  // Returns false at end of file; skips blank lines, collects comment lines.
  bool next(CsvRow& row) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      if (line[0] == '#') {
        comments_.push_back(line);
        continue;
      }
      row.line = line_no_;
      row.fields.clear();
      std::size_t start = 0;
      for (;;) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
          row.fields.push_back(line.substr(start));
          break;
        }
        row.fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
      }
      return true;
    }
    return false;
  }

  const std::vector<std::string>& comments() const { return comments_; }

  double parse_double(const CsvRow& row, std::size_t field) const {
    check_field(row, field);
    const std::string& s = row.fields[field];
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || s.empty() || errno == ERANGE)
      throw CsvError(path_, row.line, "expected a number, got '" + s + "'");
    return v;
  }

  long parse_int(const CsvRow& row, std::size_t field) const {
    check_field(row, field);
    const std::string& s = row.fields[field];
    char* end = nullptr;
    errno = 0;
    const long v = std::strtol(s.c_str(), &end, 10);
    if (end != s.c_str() + s.size() || s.empty() || errno == ERANGE)
      throw CsvError(path_, row.line, "expected an integer, got '" + s + "'");
    return v;
  }

  void check_field(const CsvRow& row, std::size_t field) const {
    if (field >= row.fields.size())
      throw CsvError(path_, row.line,
                     "expected at least " + std::to_string(field + 1) + " fields, got " +
                         std::to_string(row.fields.size()));
  }

  void expect_header(const CsvRow& row, const std::vector<std::string>& names) const {
    if (row.fields != names) {
      std::string want;
      for (std::size_t i = 0; i < names.size(); ++i) want += (i ? "," : "") + names[i];
      throw CsvError(path_, row.line, "bad header, expected '" + want + "'");
    }
  }

 private:
  std::string path_;
  std::ifstream in_;
  int line_no_ = 0;
  std::vector<std::string> comments_;
};

// %.17g keeps doubles round-trippable and files byte-stable.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Collects lines, then writes atomically (temp file + rename).
class AtomicFileWriter {
 public:
  explicit AtomicFileWriter(std::string path) : path_(std::move(path)) {}

  void write_line(const std::string& line) { out_ << line << '\n'; }

  template <typename... Parts>
  void write_row(const Parts&... parts) {
    std::string line;
    append_fields(line, parts...);
    write_line(line);
  }

  void commit() {
    const std::string tmp = path_ + ".tmp";
    {
      std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
      if (!f) throw std::runtime_error("cannot write " + tmp);
      f << out_.str();
    }
    std::filesystem::rename(tmp, path_);
  }

 private:
  static void append_one(std::string& line, const std::string& s) { line += s; }
  static void append_one(std::string& line, const char* s) { line += s; }
  static void append_one(std::string& line, double v) { line += format_double(v); }
  static void append_one(std::string& line, int v) { line += std::to_string(v); }
  static void append_one(std::string& line, long v) { line += std::to_string(v); }
  static void append_one(std::string& line, std::size_t v) { line += std::to_string(v); }

  template <typename First, typename... Rest>
  static void append_fields(std::string& line, const First& first, const Rest&... rest) {
    append_one(line, first);
    if constexpr (sizeof...(rest) > 0) {
      line += ',';
      append_fields(line, rest...);
    }
  }

  std::string path_;
  std::ostringstream out_;
};

}  // namespace micfit
