#include "l2d/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace l2d {

namespace {

constexpr int kWidth = 720;
constexpr int kHeight = 480;
constexpr int kMarginLeft = 70;
constexpr int kMarginRight = 160;
constexpr int kMarginTop = 40;
constexpr int kMarginBottom = 55;

const char* kPalette[] = {"#32349f", "#cc7a28", "#37cca8", "#cc79a7",
                          "#4477aa", "#777777", "#bb4444", "#44aa66"};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace

std::string render_line_chart(const std::string& title,
                              const std::string& x_label,
                              const std::string& y_label,
                              const std::vector<SvgSeries>& series) {
  double x_min = 0.0, x_max = 1.0, y_min = 0.0, y_max = 1.0;
  bool first = true;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      const double err = i < s.y_err.size() ? s.y_err[i] : 0.0;
      if (first) {
        x_min = x_max = s.x[i];
        y_min = s.y[i] - err;
        y_max = s.y[i] + err;
        first = false;
      } else {
        x_min = std::min(x_min, s.x[i]);
        x_max = std::max(x_max, s.x[i]);
        y_min = std::min(y_min, s.y[i] - err);
        y_max = std::max(y_max, s.y[i] + err);
      }
    }
  }
  if (x_max <= x_min) x_max = x_min + 1.0;
  if (y_max <= y_min) y_max = y_min + 1.0;
  const double y_pad = 0.05 * (y_max - y_min);
  y_min -= y_pad;
  y_max += y_pad;

  const double plot_w = kWidth - kMarginLeft - kMarginRight;
  const double plot_h = kHeight - kMarginTop - kMarginBottom;
  const auto px = [&](double x) {
    return kMarginLeft + (x - x_min) / (x_max - x_min) * plot_w;
  };
  const auto py = [&](double y) {
    return kMarginTop + (1.0 - (y - y_min) / (y_max - y_min)) * plot_h;
  };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"15\">" << title << "</text>\n";

  // Axes with 5 ticks per side.
  out << "<g stroke=\"#333\" stroke-width=\"1\" font-family=\"sans-serif\" "
         "font-size=\"11\">\n";
  out << "<line x1=\"" << px(x_min) << "\" y1=\"" << py(y_min) << "\" x2=\""
      << px(x_max) << "\" y2=\"" << py(y_min) << "\"/>\n";
  out << "<line x1=\"" << px(x_min) << "\" y1=\"" << py(y_min) << "\" x2=\""
      << px(x_min) << "\" y2=\"" << py(y_max) << "\"/>\n";
  for (int t = 0; t <= 5; ++t) {
    const double fx = x_min + (x_max - x_min) * t / 5.0;
    const double fy = y_min + (y_max - y_min) * t / 5.0;
    out << "<line x1=\"" << px(fx) << "\" y1=\"" << py(y_min) << "\" x2=\"" << px(fx)
        << "\" y2=\"" << py(y_min) + 5 << "\"/>\n";
    out << "<text x=\"" << px(fx) << "\" y=\"" << py(y_min) + 18
        << "\" text-anchor=\"middle\" stroke=\"none\" fill=\"#333\">" << fmt(fx)
        << "</text>\n";
    out << "<line x1=\"" << px(x_min) - 5 << "\" y1=\"" << py(fy) << "\" x2=\""
        << px(x_min) << "\" y2=\"" << py(fy) << "\"/>\n";
    out << "<text x=\"" << px(x_min) - 8 << "\" y=\"" << py(fy) + 4
        << "\" text-anchor=\"end\" stroke=\"none\" fill=\"#333\">" << fmt(fy)
        << "</text>\n";
  }
  out << "</g>\n";
  out << "<text x=\"" << kMarginLeft + plot_w / 2 << "\" y=\"" << kHeight - 12
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
      << x_label << "</text>\n";
  out << "<text x=\"18\" y=\"" << kMarginTop + plot_h / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
      << "transform=\"rotate(-90 18 " << kMarginTop + plot_h / 2 << ")\">" << y_label
      << "</text>\n";

  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = kPalette[si % (sizeof(kPalette) / sizeof(kPalette[0]))];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      out << px(s.x[i]) << "," << py(s.y[i]) << " ";
    }
    out << "\"/>\n";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      const double err = i < s.y_err.size() ? s.y_err[i] : 0.0;
      out << "<circle cx=\"" << px(s.x[i]) << "\" cy=\"" << py(s.y[i])
          << "\" r=\"3\" fill=\"" << color << "\"/>\n";
      if (err > 0.0) {
        out << "<line stroke=\"" << color << "\" x1=\"" << px(s.x[i]) << "\" y1=\""
            << py(s.y[i] - err) << "\" x2=\"" << px(s.x[i]) << "\" y2=\""
            << py(s.y[i] + err) << "\"/>\n";
        out << "<line stroke=\"" << color << "\" x1=\"" << px(s.x[i]) - 4 << "\" y1=\""
            << py(s.y[i] - err) << "\" x2=\"" << px(s.x[i]) + 4 << "\" y2=\""
            << py(s.y[i] - err) << "\"/>\n";
        out << "<line stroke=\"" << color << "\" x1=\"" << px(s.x[i]) - 4 << "\" y1=\""
            << py(s.y[i] + err) << "\" x2=\"" << px(s.x[i]) + 4 << "\" y2=\""
            << py(s.y[i] + err) << "\"/>\n";
      }
    }
    const double ly = kMarginTop + 16.0 * static_cast<double>(si);
    out << "<line stroke=\"" << color << "\" stroke-width=\"2\" x1=\""
        << kWidth - kMarginRight + 14 << "\" y1=\"" << ly + 9 << "\" x2=\""
        << kWidth - kMarginRight + 34 << "\" y2=\"" << ly + 9 << "\"/>\n";
    out << "<text x=\"" << kWidth - kMarginRight + 40 << "\" y=\"" << ly + 13
        << "\" font-family=\"sans-serif\" font-size=\"12\">" << s.label << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

void write_line_chart(const std::string& path, const std::string& title,
                      const std::string& x_label, const std::string& y_label,
                      const std::vector<SvgSeries>& series) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << render_line_chart(title, x_label, y_label, series);
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace l2d
