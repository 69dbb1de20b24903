#include "svg_plots.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "pry/common.hpp"

namespace pry::tools {

namespace {

constexpr double kW = 720.0;
constexpr double kH = 420.0;
constexpr double kMarginL = 64.0;
constexpr double kMarginR = 20.0;
constexpr double kMarginT = 36.0;
constexpr double kMarginB = 56.0;

const char* kSeriesColors[] = {"#1f6fb2", "#d1495b", "#3a8f5d", "#8e6fb8",
                               "#c98a2d", "#5b5b5b"};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

struct Svg {
  std::ostringstream out;

  Svg() {
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW
        << "\" height=\"" << kH << "\" viewBox=\"0 0 " << kW << " " << kH
        << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  }

  void rect(double x, double y, double w, double h, const std::string& fill,
            double opacity = 1.0) {
    out << "<rect x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" width=\""
        << fmt(w) << "\" height=\"" << fmt(h) << "\" fill=\"" << fill
        << "\" fill-opacity=\"" << opacity << "\"/>\n";
  }

  void line(double x1, double y1, double x2, double y2,
            const std::string& stroke, double width = 1.0) {
    out << "<line x1=\"" << fmt(x1) << "\" y1=\"" << fmt(y1) << "\" x2=\""
        << fmt(x2) << "\" y2=\"" << fmt(y2) << "\" stroke=\"" << stroke
        << "\" stroke-width=\"" << width << "\"/>\n";
  }

  void polyline(const std::vector<std::pair<double, double>>& pts,
                const std::string& stroke, double width = 1.5) {
    out << "<polyline fill=\"none\" stroke=\"" << stroke
        << "\" stroke-width=\"" << width << "\" points=\"";
    for (const auto& [x, y] : pts) out << fmt(x) << "," << fmt(y) << " ";
    out << "\"/>\n";
  }

  void text(double x, double y, const std::string& s, int size = 12,
            const std::string& anchor = "start",
            const std::string& fill = "#222") {
    out << "<text x=\"" << fmt(x) << "\" y=\"" << fmt(y)
        << "\" font-family=\"sans-serif\" font-size=\"" << size
        << "\" text-anchor=\"" << anchor << "\" fill=\"" << fill << "\">" << s
        << "</text>\n";
  }

  std::string finish() {
    out << "</svg>\n";
    return out.str();
  }
};

}  // namespace

TraceSeries load_trace_csv(const std::string& path, const std::string& label) {
  std::ifstream in(path);
  require(bool(in), "cannot open trace csv: " + path);
  TraceSeries series;
  series.label = label;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string step, phase, fx, fz, fnorm;
    std::getline(row, step, ',');
    std::getline(row, phase, ',');
    std::getline(row, fx, ',');
    std::getline(row, fz, ',');
    std::getline(row, fnorm, ',');
    require(!fz.empty(), "malformed trace row in " + path + ": " + line);
    series.phases.push_back(phase);
    series.fz.push_back(std::abs(std::stod(fz)));
  }
  return series;
}

std::string rates_svg(const std::vector<rollout::BenchmarkReport>& reports) {
  require(!reports.empty(), "rates_svg: no reports");
  Svg svg;
  const double plot_w = kW - kMarginL - kMarginR;
  const double plot_h = kH - kMarginT - kMarginB;
  const double y0 = kMarginT + plot_h;

  for (int tick = 0; tick <= 10; tick += 2) {
    const double y = y0 - plot_h * tick / 10.0;
    svg.line(kMarginL, y, kMarginL + plot_w, y, "#dddddd");
    svg.text(kMarginL - 8, y + 4, fmt(tick / 10.0), 11, "end");
  }

  const double group_w = plot_w / double(reports.size());
  const double bar_w = std::min(48.0, group_w / 3.0);
  for (size_t i = 0; i < reports.size(); ++i) {
    const rollout::BenchmarkReport& r = reports[i];
    const double cx = kMarginL + group_w * (double(i) + 0.5);
    const double id_h = plot_h * r.rate(false);
    const double ood_h = plot_h * r.rate(true);
    svg.rect(cx - bar_w - 3, y0 - id_h, bar_w, id_h, kSeriesColors[0]);
    svg.rect(cx + 3, y0 - ood_h, bar_w, ood_h, kSeriesColors[1]);
    svg.text(cx - bar_w / 2.0 - 3, y0 - id_h - 5, fmt(r.rate(false)), 11,
             "middle");
    svg.text(cx + bar_w / 2.0 + 3, y0 - ood_h - 5, fmt(r.rate(true)), 11,
             "middle");
    svg.text(cx, y0 + 18, r.variant, 13, "middle");
  }

  svg.line(kMarginL, y0, kMarginL + plot_w, y0, "#222", 1.2);
  svg.line(kMarginL, kMarginT, kMarginL, y0, "#222", 1.2);
  svg.text(kMarginL, kMarginT - 12, "success rate by variant", 15);
  svg.rect(kW - 200, kMarginT, 12, 12, kSeriesColors[0]);
  svg.text(kW - 184, kMarginT + 10, "in-distribution", 12);
  svg.rect(kW - 200, kMarginT + 18, 12, 12, kSeriesColors[1]);
  svg.text(kW - 184, kMarginT + 28, "out-of-distribution", 12);
  return svg.finish();
}

std::string traces_svg(const std::vector<TraceSeries>& series) {
  require(!series.empty(), "traces_svg: no series");
  Svg svg;
  const double plot_w = kW - kMarginL - kMarginR;
  const double plot_h = kH - kMarginT - kMarginB;
  const double y0 = kMarginT + plot_h;

  size_t max_steps = 1;
  double max_f = 1e-9;
  for (const TraceSeries& s : series) {
    max_steps = std::max(max_steps, s.fz.size());
    for (double f : s.fz) max_f = std::max(max_f, f);
  }
  max_f *= 1.1;
  const auto px = [&](size_t step) {
    return kMarginL + plot_w * double(step) / double(max_steps - 1);
  };
  const auto py = [&](double f) { return y0 - plot_h * f / max_f; };

  // Phase bands from the reference trace.
  const TraceSeries& ref = series.front();
  const auto band_color = [](const std::string& phase) -> const char* {
    if (phase == "insert_contact") return "#f2e2c4";
    if (phase == "pry_contact") return "#f4cfcf";
    if (phase == "lifting") return "#cfe4f4";
    return "";
  };
  size_t band_start = 0;
  for (size_t i = 1; i <= ref.phases.size(); ++i) {
    if (i == ref.phases.size() || ref.phases[i] != ref.phases[band_start]) {
      const char* color = band_color(ref.phases[band_start]);
      if (color[0] != '\0')
        svg.rect(px(band_start), kMarginT, px(i - 1) - px(band_start) + 1,
                 plot_h, color, 0.6);
      if (i < ref.phases.size()) band_start = i;
    }
  }

  for (int tick = 0; tick <= 4; ++tick) {
    const double f = max_f * tick / 4.0;
    svg.line(kMarginL, py(f), kMarginL + plot_w, py(f), "#dddddd");
    svg.text(kMarginL - 8, py(f) + 4, fmt(f), 11, "end");
  }

  for (size_t si = 0; si < series.size(); ++si) {
    std::vector<std::pair<double, double>> pts;
    for (size_t i = 0; i < series[si].fz.size(); ++i)
      pts.emplace_back(px(i), py(series[si].fz[i]));
    svg.polyline(pts, kSeriesColors[si % 6], si == 0 ? 2.0 : 1.5);
    svg.rect(kW - 210, kMarginT + 18.0 * double(si), 12, 3,
             kSeriesColors[si % 6]);
    svg.text(kW - 194, kMarginT + 18.0 * double(si) + 5, series[si].label, 12);
  }

  svg.line(kMarginL, y0, kMarginL + plot_w, y0, "#222", 1.2);
  svg.line(kMarginL, kMarginT, kMarginL, y0, "#222", 1.2);
  svg.text(kMarginL, kMarginT - 12, "|fz| (N) over episode steps", 15);
  svg.text(kMarginL + plot_w / 2.0, kH - 20, "step", 13, "middle");
  return svg.finish();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  require(bool(out), "cannot open for writing: " + path);
  out << text;
  require(bool(out), "short write: " + path);
}

}  // namespace pry::tools
