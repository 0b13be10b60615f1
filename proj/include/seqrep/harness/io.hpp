#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace seqrep::harness {

/// Shortest decimal that parses back to the same double; "nan", "inf", "-inf" otherwise.
std::string format_double(double value);
/// Inverse of format_double. Throws UsageError on malformed input.
double parse_double(std::string_view text);

void write_file(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

/// Lowercase hex SHA-256 of the file contents.
std::string sha256_file(const std::filesystem::path& path);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::size_t column(std::string_view name) const;
};

/// Builds CSV text with '\n' line endings.
class CsvWriter {
 public:
  explicit CsvWriter(std::span<const std::string> header);
  void row(std::span<const double> values);
  const std::string& str() const { return text_; }

 private:
  std::size_t columns_;
  std::string text_;
};

/// Numeric CSV with one header line. Throws UsageError naming the file on malformed content.
CsvTable read_csv(const std::filesystem::path& path);

}  // namespace seqrep::harness
