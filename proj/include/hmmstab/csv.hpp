#ifndef HMMSTAB_CSV_HPP_
#define HMMSTAB_CSV_HPP_

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

namespace hmmstab {

// 17 significant digits; round-trips every double.
std::string format_double(double v);

// RFC-4180 writer with '\n' line endings.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::initializer_list<std::string_view> header);

  CsvWriter& field(std::string_view s);
  CsvWriter& field(double v);
  CsvWriter& field(long long v);
  CsvWriter& field(int v) { return field(static_cast<long long>(v)); }
  CsvWriter& field(std::size_t v) { return field(static_cast<long long>(v)); }
  CsvWriter& empty();
  void end_row();

 private:
  void separator();
  std::ofstream out_;
  std::filesystem::path path_;
  bool row_started_ = false;
};

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path);

}  // namespace hmmstab

#endif  // HMMSTAB_CSV_HPP_
