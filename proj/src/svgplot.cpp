#include "impedancemetry/svgplot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "impedancemetry/csv.hpp"

namespace impedancemetry {

namespace {
const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                         "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
}

SvgPlot::SvgPlot(std::string title, std::string xlabel, std::string ylabel, bool logX, bool logY)
    : title_(std::move(title)),
      xlabel_(std::move(xlabel)),
      ylabel_(std::move(ylabel)),
      logX_(logX),
      logY_(logY) {}

void SvgPlot::add_series(const std::string& name, const std::vector<double>& x,
                         const std::vector<double>& y) {
    series_.push_back({name, x, y});
}

std::string SvgPlot::render() const {
    const double w = 720, h = 480;
    const double ml = 80, mr = 20, mt = 40, mb = 60;
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double ymin = xmin, ymax = -xmin;
    auto tx = [&](double v) { return logX_ ? std::log10(v) : v; };
    auto ty = [&](double v) { return logY_ ? std::log10(v) : v; };
    for (const auto& s : series_) {
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (logX_ && !(s.x[i] > 0)) continue;
            if (logY_ && !(s.y[i] > 0)) continue;
            xmin = std::min(xmin, tx(s.x[i]));
            xmax = std::max(xmax, tx(s.x[i]));
            ymin = std::min(ymin, ty(s.y[i]));
            ymax = std::max(ymax, ty(s.y[i]));
        }
    }
    if (!(xmax > xmin)) {
        xmax = xmin + 1;
    }
    if (!(ymax > ymin)) {
        ymax = ymin + 1;
    }
    const double xpad = 0.03 * (xmax - xmin), ypad = 0.06 * (ymax - ymin);
    xmin -= xpad;
    xmax += xpad;
    ymin -= ypad;
    ymax += ypad;
    auto px = [&](double v) { return ml + (tx(v) - xmin) / (xmax - xmin) * (w - ml - mr); };
    auto py = [&](double v) { return h - mb - (ty(v) - ymin) / (ymax - ymin) * (h - mt - mb); };

    std::ostringstream o;
    o << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w << "' height='" << h << "'>\n";
    o << "<rect width='100%' height='100%' fill='white'/>\n";
    o << "<text x='" << w / 2 << "' y='24' text-anchor='middle' font-size='16'>" << title_
      << "</text>\n";
    o << "<text x='" << w / 2 << "' y='" << h - 14 << "' text-anchor='middle' font-size='13'>"
      << xlabel_ << (logX_ ? " (log)" : "") << "</text>\n";
    o << "<text x='18' y='" << h / 2 << "' text-anchor='middle' font-size='13' transform='rotate(-90 18 "
      << h / 2 << ")'>" << ylabel_ << (logY_ ? " (log)" : "") << "</text>\n";
    o << "<rect x='" << ml << "' y='" << mt << "' width='" << w - ml - mr << "' height='"
      << h - mt - mb << "' fill='none' stroke='#333'/>\n";
    // axis end labels
    o << "<text x='" << ml << "' y='" << h - mb + 16 << "' font-size='11'>"
      << format_number(logX_ ? std::pow(10, xmin) : xmin) << "</text>\n";
    o << "<text x='" << w - mr << "' y='" << h - mb + 16 << "' text-anchor='end' font-size='11'>"
      << format_number(logX_ ? std::pow(10, xmax) : xmax) << "</text>\n";
    o << "<text x='" << ml - 4 << "' y='" << h - mb << "' text-anchor='end' font-size='11'>"
      << format_number(logY_ ? std::pow(10, ymin) : ymin) << "</text>\n";
    o << "<text x='" << ml - 4 << "' y='" << mt + 10 << "' text-anchor='end' font-size='11'>"
      << format_number(logY_ ? std::pow(10, ymax) : ymax) << "</text>\n";

    int ci = 0;
    for (const auto& s : series_) {
        const char* color = kColors[ci % 10];
        o << "<polyline fill='none' stroke='" << color << "' stroke-width='1.5' points='";
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (logX_ && !(s.x[i] > 0)) continue;
            if (logY_ && !(s.y[i] > 0)) continue;
            o << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
        }
        o << "'/>\n";
        o << "<text x='" << w - mr - 6 << "' y='" << mt + 16 + 14 * ci
          << "' text-anchor='end' font-size='12' fill='" << color << "'>" << s.name
          << "</text>\n";
        ++ci;
    }
    o << "</svg>\n";
    return o.str();
}

void SvgPlot::write_file(const std::string& path) const { write_text_file(path, render()); }

}  // namespace impedancemetry
