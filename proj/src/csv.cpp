#include "dtsurv/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

#include "dtsurv/error.hpp"

namespace dtsurv::csv {

Reader::Reader(const std::filesystem::path& path) : path_(path), in_(path) {
  if (!in_) {
    throw Error(ErrorCode::kIo, "cannot open " + path.string());
  }
  if (!read_record(header_)) {
    throw Error(ErrorCode::kSchema, "missing header row in " + path.string());
  }
  for (std::size_t i = 0; i < header_.size(); ++i) {
    std::string name = trim(header_[i]);
    // Strip a UTF-8 byte order mark on the first column.
    if (i == 0 && name.size() >= 3 && name.compare(0, 3, "\xEF\xBB\xBF") == 0) {
      name = name.substr(3);
    }
    header_[i] = name;
    index_.emplace(name, i);
  }
}

std::optional<std::size_t> Reader::find(std::string_view column) const {
  auto it = index_.find(std::string(column));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t Reader::require(std::string_view column) const {
  if (auto i = find(column)) return *i;
  throw Error(ErrorCode::kSchema, "missing required column '" + std::string(column) +
                                      "' in " + path_.string());
}

bool Reader::next(std::vector<std::string>& fields) {
  while (read_record(fields)) {
    if (fields.size() == 1 && fields[0].empty()) continue;  // blank line
    if (fields.size() != header_.size()) {
      throw Error(ErrorCode::kSchema,
                  path_.string() + ":" + std::to_string(line_) + ": expected " +
                      std::to_string(header_.size()) + " fields, got " +
                      std::to_string(fields.size()));
    }
    return true;
  }
  return false;
}

bool Reader::read_record(std::vector<std::string>& fields) {
  fields.clear();
  std::string line;
  if (!std::getline(in_, line)) return false;
  ++line_;
  std::string field;
  bool quoted = false;
  std::size_t i = 0;
  while (true) {
    if (i == line.size()) {
      if (quoted) {
        // Embedded newline inside a quoted field.
        std::string more;
        if (!std::getline(in_, more)) {
          throw Error(ErrorCode::kSchema, path_.string() + ": unterminated quote");
        }
        ++line_;
        field.push_back('\n');
        line = std::move(more);
        i = 0;
        continue;
      }
      break;
    }
    char c = line[i++];
    if (quoted) {
      if (c == '"') {
        if (i < line.size() && line[i] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c == '\r' && i == line.size()) {
      // CRLF line ending
    } else {
      field.push_back(c);
    }
  }
  fields.push_back(std::move(field));
  return true;
}

Writer::Writer(const std::filesystem::path& path) : path_(path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  out_.open(path, std::ios::binary | std::ios::trunc);
  if (!out_) throw Error(ErrorCode::kIo, "cannot write " + path.string());
}

void Writer::row(const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out_.put(',');
    const std::string& f = fields[i];
    if (f.find_first_of(",\"\n") != std::string::npos) {
      out_.put('"');
      for (char c : f) {
        if (c == '"') out_.put('"');
        out_.put(c);
      }
      out_.put('"');
    } else {
      out_ << f;
    }
  }
  out_.put('\n');
}

void Writer::close() {
  out_.close();
  if (!out_) throw Error(ErrorCode::kIo, "failed writing " + path_.string());
}

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (value == 0.0) return "0";  // folds -0
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string format_int(std::int64_t value) { return std::to_string(value); }

std::string trim(std::string_view text) {
  std::size_t b = 0, e = text.size();
  while (b < e && (text[b] == ' ' || text[b] == '\t' || text[b] == '\r')) ++b;
  while (e > b && (text[e - 1] == ' ' || text[e - 1] == '\t' || text[e - 1] == '\r')) --e;
  return std::string(text.substr(b, e - b));
}

std::optional<std::int64_t> parse_int(std::string_view text) {
  std::string t = trim(text);
  if (t.empty()) return std::nullopt;
  std::int64_t v = 0;
  const char* first = t.data();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size()) return std::nullopt;
  return v;
}

std::optional<double> parse_double(std::string_view text) {
  std::string t = trim(text);
  if (t.empty()) return std::nullopt;
  double v = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size()) return std::nullopt;
  return v;
}

}  // namespace dtsurv::csv
