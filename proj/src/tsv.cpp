#include "toxdet/tsv.hpp"

#include <algorithm>

#include "toxdet/error.hpp"

namespace toxdet {

std::vector<std::string> splitTabs(std::string_view line) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      out.emplace_back(line.substr(start));
      break;
    }
    out.emplace_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return out;
}

std::string joinTabs(const std::vector<std::string>& fields) {
  std::string out;
  for (size_t i = 0; i < fields.size(); ++i) {
    if (i) out += '\t';
    if (fields[i].find_first_of("\t\n\r") != std::string::npos) {
      throw FormatError("joinTabs: field " + std::to_string(i) +
                        " contains a tab or newline");
    }
    out += fields[i];
  }
  return out;
}

namespace {

bool getlineStripCr(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

}  // namespace

TsvReader::TsvReader(std::istream& in, std::string source_name)
    : in_(in), source_(std::move(source_name)) {
  std::string line;
  if (!getlineStripCr(in_, line)) {
    throw FormatError(source_ + ": empty file, expected a header row");
  }
  header_ = splitTabs(line);
}

std::optional<int> TsvReader::findColumn(std::string_view name) const {
  auto it = std::find(header_.begin(), header_.end(), name);
  if (it == header_.end()) return std::nullopt;
  return static_cast<int>(it - header_.begin());
}

int TsvReader::requireColumn(std::string_view name) const {
  if (auto idx = findColumn(name)) return *idx;
  throw FormatError(source_ + ": missing required column '" +
                    std::string(name) + "'");
}

bool TsvReader::next(std::vector<std::string>& fields) {
  std::string line;
  while (getlineStripCr(in_, line)) {
    ++line_;
    if (line.empty()) continue;  // tolerate blank lines
    fields = splitTabs(line);
    if (fields.size() > header_.size()) {
      throw FormatError(source_ + ":" + std::to_string(line_) + ": row has " +
                        std::to_string(fields.size()) + " fields, header has " +
                        std::to_string(header_.size()));
    }
    fields.resize(header_.size());
    return true;
  }
  return false;
}

}  // namespace toxdet
