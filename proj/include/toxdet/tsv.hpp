#pragma once

#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace toxdet {

// Minimal reader for tab-separated tables with a header row.
// Fields carry no quoting; embedded newlines/tabs in the source corpus are
// placeholder-escaped (see corpus.hpp) so a physical line is always a row.
class TsvReader {
 public:
  explicit TsvReader(std::istream& in, std::string source_name = "<stream>");

  // Column index by header name, or error naming the column and the source.
  int requireColumn(std::string_view name) const;
  std::optional<int> findColumn(std::string_view name) const;

  // Reads the next data row. Returns false at end of input.
  // Short rows are padded with empty fields; long rows are an error.
  bool next(std::vector<std::string>& fields);

  const std::vector<std::string>& header() const { return header_; }
  // 1-based line number of the row most recently returned by next().
  long line() const { return line_; }
  const std::string& source() const { return source_; }

 private:
  std::istream& in_;
  std::string source_;
  std::vector<std::string> header_;
  long line_ = 1;
};

std::vector<std::string> splitTabs(std::string_view line);

// Serializes one row; fields must not contain tabs or newlines.
std::string joinTabs(const std::vector<std::string>& fields);

}  // namespace toxdet
