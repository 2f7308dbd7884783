#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <variant>
#include <vector>

#include "diffsw/errors.hpp"

namespace diffsw::io {

/// Reals are written with 17 significant digits so they parse back exactly.
std::string format_real(double x);

class CsvWriter {
 public:
  using Cell = std::variant<double, long long, std::string>;

  /// Creates the file; throws InvalidArgument if it already exists.
  CsvWriter(const std::filesystem::path& path, std::vector<std::string> header);

  void row(const std::vector<Cell>& cells);

 private:
  std::ofstream out_;
  std::size_t columns_;
};

}  // namespace diffsw::io
