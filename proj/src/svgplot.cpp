#include "replab/svgplot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace replab {

namespace {

double tick_step(double span) {
  if (span <= 0) return 1.0;
  double raw = span / 6.0;
  double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double norm = raw / mag;
  double step = norm < 1.5 ? 1.0 : norm < 3.5 ? 2.0 : norm < 7.5 ? 5.0 : 10.0;
  return step * mag;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

void write_svg_lineplot(const std::filesystem::path& path,
                        const std::vector<PlotSeries>& series,
                        const PlotOptions& options) {
  const double W = options.width, H = options.height;
  const double ml = 70, mr = 20, mt = 40, mb = 55;

  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  auto tx = [&](double v) { return options.log_x ? std::log10(v) : v; };
  auto ty = [&](double v) { return options.log_y ? std::log10(v) : v; };
  for (const PlotSeries& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      double xv = tx(s.x[i]), yv = ty(s.y[i]);
      if (!std::isfinite(xv) || !std::isfinite(yv)) continue;
      xmin = std::min(xmin, xv); xmax = std::max(xmax, xv);
      ymin = std::min(ymin, yv); ymax = std::max(ymax, yv);
    }
  }
  if (!std::isfinite(xmin)) { xmin = 0; xmax = 1; ymin = 0; ymax = 1; }
  if (xmax - xmin < 1e-12) { xmax += 0.5; xmin -= 0.5; }
  if (ymax - ymin < 1e-12) { ymax += 0.5; ymin -= 0.5; }
  double ypad = 0.05 * (ymax - ymin);
  ymin -= ypad; ymax += ypad;

  auto px = [&](double v) { return ml + (tx(v) - xmin) / (xmax - xmin) * (W - ml - mr); };
  auto py = [&](double v) { return H - mb - (ty(v) - ymin) / (ymax - ymin) * (H - mt - mb); };

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W
      << "\" height=\"" << H << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
  for (const PlotSeries& s : series) {
    out << "<!-- data " << s.label << ":";
    for (std::size_t i = 0; i < s.x.size(); ++i)
      out << " (" << fmt(s.x[i]) << "," << fmt(s.y[i]) << ")";
    out << " -->\n";
  }
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"16\">" << options.title
      << "</text>\n";

  // Axes with ticks in the transformed coordinates.
  out << "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#333\">\n";
  double sx = tick_step(xmax - xmin);
  for (double t = std::ceil(xmin / sx) * sx; t <= xmax + 1e-9; t += sx) {
    double X = ml + (t - xmin) / (xmax - xmin) * (W - ml - mr);
    out << "<line x1=\"" << X << "\" y1=\"" << mt << "\" x2=\"" << X
        << "\" y2=\"" << H - mb << "\" stroke=\"#ddd\"/>\n";
    double label = options.log_x ? std::pow(10.0, t) : t;
    out << "<text x=\"" << X << "\" y=\"" << H - mb + 16
        << "\" text-anchor=\"middle\">" << fmt(label) << "</text>\n";
  }
  double sy = tick_step(ymax - ymin);
  for (double t = std::ceil(ymin / sy) * sy; t <= ymax + 1e-9; t += sy) {
    double Y = H - mb - (t - ymin) / (ymax - ymin) * (H - mt - mb);
    out << "<line x1=\"" << ml << "\" y1=\"" << Y << "\" x2=\"" << W - mr
        << "\" y2=\"" << Y << "\" stroke=\"#ddd\"/>\n";
    double label = options.log_y ? std::pow(10.0, t) : t;
    out << "<text x=\"" << ml - 6 << "\" y=\"" << Y + 4
        << "\" text-anchor=\"end\">" << fmt(label) << "</text>\n";
  }
  out << "</g>\n";
  out << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << W - ml - mr
      << "\" height=\"" << H - mt - mb
      << "\" fill=\"none\" stroke=\"#333\"/>\n";
  out << "<text x=\"" << W / 2 << "\" y=\"" << H - 12
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"13\">"
      << options.x_label << "</text>\n";
  out << "<text x=\"18\" y=\"" << H / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"13\" transform=\"rotate(-90 18 "
      << H / 2 << ")\">" << options.y_label << "</text>\n";

  int li = 0;
  for (const PlotSeries& s : series) {
    out << "<polyline fill=\"none\" stroke=\"" << s.color
        << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.y[i]) || (options.log_y && s.y[i] <= 0)) continue;
      out << px(s.x[i]) << "," << py(s.y[i]) << " ";
    }
    out << "\"/>\n";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.y[i]) || (options.log_y && s.y[i] <= 0)) continue;
      out << "<circle cx=\"" << px(s.x[i]) << "\" cy=\"" << py(s.y[i])
          << "\" r=\"3\" fill=\"" << s.color << "\"/>\n";
    }
    double ly = mt + 16 + 18 * li++;
    out << "<line x1=\"" << W - mr - 150 << "\" y1=\"" << ly << "\" x2=\""
        << W - mr - 126 << "\" y2=\"" << ly << "\" stroke=\"" << s.color
        << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << W - mr - 120 << "\" y=\"" << ly + 4
        << "\" font-family=\"sans-serif\" font-size=\"12\">" << s.label
        << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace replab
