#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace dtsurv::csv {

// Minimal RFC 4180 reader: comma separated, double-quote escaping, header row.
class Reader {
 public:
  explicit Reader(const std::filesystem::path& path);

  const std::vector<std::string>& header() const { return header_; }

  // Index of a header column; throws a schema error naming the column and
  // file when it is absent.
  std::size_t require(std::string_view column) const;
  std::optional<std::size_t> find(std::string_view column) const;

  // Reads the next record into `fields`; false at end of file.
  bool next(std::vector<std::string>& fields);

  std::size_t line_number() const { return line_; }
  const std::filesystem::path& path() const { return path_; }

 private:
  bool read_record(std::vector<std::string>& fields);

  std::filesystem::path path_;
  std::ifstream in_;
  std::vector<std::string> header_;
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t line_ = 0;
};

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path);

  void row(const std::vector<std::string>& fields);
  void close();

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

// 17 significant digits, shortest representation that round-trips when
// possible; integers print without a decimal point.
std::string format_double(double value);
std::string format_int(std::int64_t value);

std::optional<std::int64_t> parse_int(std::string_view text);
std::optional<double> parse_double(std::string_view text);

std::string trim(std::string_view text);

}  // namespace dtsurv::csv
