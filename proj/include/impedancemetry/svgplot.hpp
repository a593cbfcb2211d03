#pragma once

#include <string>
#include <vector>

namespace impedancemetry {

// Minimal static line-plot writer; convenience output next to the CSV files.
class SvgPlot {
  public:
    SvgPlot(std::string title, std::string xlabel, std::string ylabel, bool logX = false,
            bool logY = false);

    void add_series(const std::string& name, const std::vector<double>& x,
                    const std::vector<double>& y);

    std::string render() const;
    void write_file(const std::string& path) const;

  private:
    struct Series {
        std::string name;
        std::vector<double> x, y;
    };
    std::string title_, xlabel_, ylabel_;
    bool logX_, logY_;
    std::vector<Series> series_;
};

}  // namespace impedancemetry
