#pragma once

#include <filesystem>
#include <fstream>
#include <istream>
#include <string>
#include <vector>

namespace urb::csv {

// Streaming RFC-4180 style reader: quoted fields, embedded separators and
// newlines, CRLF tolerant.
class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  // Reads one record into `fields`. Returns false at end of input.
  bool next(std::vector<std::string>& fields);

  // 1-based line number where the last record started.
  size_t record_line() const { return record_line_; }

 private:
  std::istream& in_;
  size_t line_ = 1;
  size_t record_line_ = 0;
};

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}
  void row(const std::vector<std::string>& fields);

 private:
  std::ostream& out_;
};

std::string escape(const std::string& field);

// Convenience: whole-file read with a mandatory header row.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<size_t> row_lines;
};
Table read_file(const std::filesystem::path& path);

}  // namespace urb::csv
