#include "diffsw/io/csv.hpp"

#include <cstdio>

namespace diffsw::io {

std::string format_real(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, std::vector<std::string> header)
    : columns_(header.size()) {
  if (std::filesystem::exists(path)) {
    throw InvalidArgument("refusing to overwrite existing file " + path.string());
  }
  out_.open(path);
  if (!out_) throw InvalidArgument("cannot create " + path.string());
  for (std::size_t k = 0; k < header.size(); ++k) out_ << (k ? "," : "") << header[k];
  out_ << '\n';
}

void CsvWriter::row(const std::vector<Cell>& cells) {
  if (cells.size() != columns_) {
    throw ShapeMismatch("csv row has " + std::to_string(cells.size()) + " cells, header has " +
                        std::to_string(columns_));
  }
  for (std::size_t k = 0; k < cells.size(); ++k) {
    if (k) out_ << ',';
    std::visit(
        [this](const auto& v) {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, double>) {
            out_ << format_real(v);
          } else {
            out_ << v;
          }
        },
        cells[k]);
  }
  out_ << '\n';
  out_.flush();
}

}  // namespace diffsw::io
