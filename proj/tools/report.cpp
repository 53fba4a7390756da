#include "report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace pdettc::cli {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  return out;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

constexpr const char* kPalette[] = {"#1b9e77", "#d95f02", "#7570b3", "#e7298a",
                                    "#66a61e", "#e6ab02", "#a6761d", "#666666"};

}  // namespace

void write_pgm(const std::filesystem::path& path, const Field& field) {
  auto out = open_out(path);
  const double lo = field.minCoeff(), hi = field.maxCoeff();
  const double span = hi > lo ? hi - lo : 1.0;
  out << "P2\n" << field.rows() << ' ' << field.cols() << "\n255\n";
  for (Eigen::Index j = field.cols() - 1; j >= 0; --j) {
    for (Eigen::Index i = 0; i < field.rows(); ++i) {
      const double v = std::isfinite(field(i, j)) ? (field(i, j) - lo) / span : 0.0;
      out << static_cast<int>(std::lround(255.0 * std::clamp(v, 0.0, 1.0)))
          << (i + 1 == field.rows() ? '\n' : ' ');
    }
  }
}

void write_svg_plot(const std::filesystem::path& path, const std::string& title,
                    const std::string& x_label, const std::string& y_label,
                    const std::vector<Series>& series) {
  const double W = 640, H = 420, left = 70, right = 150, top = 40, bottom = 50;
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
  bool all_positive = true;
  for (const auto& s : series)
    for (std::size_t k = 0; k < s.x.size(); ++k) {
      if (!std::isfinite(s.y[k])) continue;
      xmin = std::min(xmin, s.x[k]);
      xmax = std::max(xmax, s.x[k]);
      ymin = std::min(ymin, s.y[k]);
      ymax = std::max(ymax, s.y[k]);
      all_positive = all_positive && s.y[k] > 0.0;
    }
  if (!std::isfinite(xmin)) xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  const bool logy = all_positive;
  auto ty = [&](double y) { return logy ? std::log10(y) : y; };
  double y0 = ty(ymin), y1 = ty(ymax);
  if (y1 <= y0) y1 = y0 + 1.0;
  if (xmax <= xmin) xmax = xmin + 1.0;
  auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * (W - left - right); };
  auto py = [&](double y) { return H - bottom - (ty(y) - y0) / (y1 - y0) * (H - top - bottom); };

  auto out = open_out(path);
  out << std::fixed << std::setprecision(2);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
      << escape(title) << "</text>\n";
  out << "<line x1=\"" << left << "\" y1=\"" << H - bottom << "\" x2=\"" << W - right
      << "\" y2=\"" << H - bottom << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\""
      << H - bottom << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double fx = xmin + (xmax - xmin) * k / 4.0;
    const double fy = y0 + (y1 - y0) * k / 4.0;
    const double yv = logy ? std::pow(10.0, fy) : fy;
    std::ostringstream xl, yl;
    xl << std::setprecision(3) << fx;
    yl << std::setprecision(3) << yv;
    out << "<text x=\"" << px(fx) << "\" y=\"" << H - bottom + 16
        << "\" text-anchor=\"middle\">" << xl.str() << "</text>\n";
    out << "<text x=\"" << left - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">"
        << yl.str() << "</text>\n";
  }
  out << "<text x=\"" << (left + W - right) / 2 << "\" y=\"" << H - 12
      << "\" text-anchor=\"middle\">" << escape(x_label) << "</text>\n";
  out << "<text x=\"16\" y=\"" << (top + H - bottom) / 2 << "\" text-anchor=\"middle\" "
      << "transform=\"rotate(-90 16 " << (top + H - bottom) / 2 << ")\">"
      << escape(y_label + (logy ? " (log scale)" : "")) << "</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* colour = kPalette[s % std::size(kPalette)];
    out << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"2\" points=\"";
    for (std::size_t k = 0; k < series[s].x.size(); ++k)
      if (std::isfinite(series[s].y[k]))
        out << px(series[s].x[k]) << ',' << py(series[s].y[k]) << ' ';
    out << "\"/>\n";
    const double ly = top + 18.0 * static_cast<double>(s);
    out << "<line x1=\"" << W - right + 10 << "\" y1=\"" << ly << "\" x2=\"" << W - right + 30
        << "\" y2=\"" << ly << "\" stroke=\"" << colour << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << W - right + 36 << "\" y=\"" << ly + 4 << "\">"
        << escape(series[s].label) << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace pdettc::cli
