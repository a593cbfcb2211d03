#pragma once

#include <string>
#include <vector>

namespace impedancemetry {

// Deterministic number formatting shared by every CSV and report writer, so
// output files are byte-identical across runs and parallelism levels.
std::string format_number(double v);

class CsvWriter {
  public:
    explicit CsvWriter(std::vector<std::string> header);

    void add_row(const std::vector<std::string>& cells);
    void add_row_numeric(const std::vector<double>& values);

    const std::string& str() const { return text_; }
    std::size_t rows() const { return rows_; }
    std::string headerLine() const;

    void write_file(const std::string& path) const;

  private:
    std::vector<std::string> header_;
    std::string text_;
    std::size_t rows_ = 0;
};

void write_text_file(const std::string& path, const std::string& text);

}  // namespace impedancemetry
