#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "seqls/experiment.hpp"

namespace seqls {

namespace fs = std::filesystem;

namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 440.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 170.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 50.0;
const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

std::string num(double v, int digits = 17) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (const char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct RoundStats {
  std::vector<double> mean, lo, hi;
};

RoundStats round_stats(const PlotSeries& s) {
  RoundStats st;
  std::size_t len = 0;
  for (const auto& r : s.runs) len = std::max(len, r.size());
  for (std::size_t j = 0; j < len; ++j) {
    double sum = 0.0, lo = std::numeric_limits<double>::infinity(), hi = -lo;
    int n = 0;
    for (const auto& r : s.runs) {
      if (j >= r.size()) continue;
      sum += r[j];
      lo = std::min(lo, r[j]);
      hi = std::max(hi, r[j]);
      ++n;
    }
    st.mean.push_back(sum / n);
    st.lo.push_back(lo);
    st.hi.push_back(hi);
  }
  return st;
}

bool glob_match(const char* p, const char* s) {
  if (*p == '\0') return *s == '\0';
  if (*p == '*') return glob_match(p + 1, s) || (*s != '\0' && glob_match(p, s + 1));
  if (*s == '\0') return false;
  return (*p == '?' || *p == *s) && glob_match(p + 1, s + 1);
}

}  // namespace

std::string render_risk_chart(const std::vector<PlotSeries>& series, const std::string& title) {
  std::vector<RoundStats> stats;
  double y_min = std::numeric_limits<double>::infinity(), y_max = -y_min;
  std::size_t x_max = 1;
  for (const auto& s : series) {
    stats.push_back(round_stats(s));
    const auto& st = stats.back();
    for (std::size_t j = 0; j < st.mean.size(); ++j) {
      y_min = std::min(y_min, st.lo[j]);
      y_max = std::max(y_max, st.hi[j]);
    }
    if (!st.mean.empty()) x_max = std::max(x_max, st.mean.size() - 1);
  }
  if (!std::isfinite(y_min)) y_min = -1.0, y_max = 0.0;
  if (y_max - y_min < 1e-9) y_min -= 0.05, y_max += 0.05;
  const double pad = 0.05 * (y_max - y_min);
  y_min -= pad;
  y_max += pad;

  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  const auto px = [&](double j) { return kLeft + plot_w * j / static_cast<double>(x_max); };
  const auto py = [&](double y) { return kTop + plot_h * (y_max - y) / (y_max - y_min); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << kLeft << "\" y=\"24\" font-size=\"15\">" << escape(title) << "</text>\n";

  svg << "<g class=\"axes\" stroke=\"#444\">\n";
  svg << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + plot_h << "\" x2=\"" << kLeft + plot_w << "\" y2=\""
      << kTop + plot_h << "\"/>\n";
  svg << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kTop + plot_h
      << "\"/>\n</g>\n";
  svg << "<g class=\"ticks\" fill=\"#444\">\n";
  const std::size_t x_step = std::max<std::size_t>(1, x_max / 10);
  for (std::size_t j = 0; j <= x_max; j += x_step) {
    svg << "<text x=\"" << num(px(j), 6) << "\" y=\"" << kTop + plot_h + 18 << "\" text-anchor=\"middle\">" << j
        << "</text>\n";
  }
  for (int t = 0; t <= 5; ++t) {
    const double y = y_min + (y_max - y_min) * t / 5.0;
    svg << "<text x=\"" << kLeft - 8 << "\" y=\"" << num(py(y) + 4, 6) << "\" text-anchor=\"end\">" << num(y, 3)
        << "</text>\n";
  }
  svg << "</g>\n";
  svg << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 12 << "\" text-anchor=\"middle\">round</text>\n";
  svg << "<text x=\"16\" y=\"" << kTop + plot_h / 2 << "\" transform=\"rotate(-90 16 " << kTop + plot_h / 2
      << ")\" text-anchor=\"middle\">true risk</text>\n";

  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& st = stats[i];
    const char* color = kPalette[i % std::size(kPalette)];
    const std::string label = escape(series[i].label);
    if (series[i].runs.size() > 1) {
      svg << "<polygon class=\"band\" data-series=\"" << label << "\" fill=\"" << color
          << "\" fill-opacity=\"0.18\" stroke=\"none\" points=\"";
      for (std::size_t j = 0; j < st.hi.size(); ++j) svg << num(px(j), 6) << ',' << num(py(st.hi[j]), 6) << ' ';
      for (std::size_t j = st.lo.size(); j-- > 0;) svg << num(px(j), 6) << ',' << num(py(st.lo[j]), 6) << ' ';
      svg << "\"/>\n";
    }
    svg << "<polyline class=\"series\" data-series=\"" << label << "\" data-risk=\"";
    for (std::size_t j = 0; j < st.mean.size(); ++j) svg << (j ? " " : "") << num(st.mean[j]);
    svg << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t j = 0; j < st.mean.size(); ++j) {
      svg << (j ? " " : "") << num(px(j), 6) << ',' << num(py(st.mean[j]), 6);
    }
    svg << "\"/>\n";
  }

  svg << "<g class=\"legend\">\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    const double y = kTop + 10 + 22.0 * i;
    const double x = kWidth - kRight + 16;
    svg << "<line x1=\"" << x << "\" y1=\"" << y << "\" x2=\"" << x + 24 << "\" y2=\"" << y << "\" stroke=\""
        << kPalette[i % std::size(kPalette)] << "\" stroke-width=\"3\"/>\n";
    svg << "<text class=\"legend-entry\" x=\"" << x + 30 << "\" y=\"" << y + 4 << "\">" << escape(series[i].label)
        << " (" << series[i].runs.size() << ")</text>\n";
  }
  svg << "</g>\n</svg>\n";
  return svg.str();
}

std::vector<fs::path> match_traces(const std::string& pattern) {
  const fs::path p(pattern);
  const std::string name = p.filename().string();
  const fs::path dir = p.has_parent_path() ? p.parent_path() : fs::path(".");
  std::vector<fs::path> out;
  if (name.find_first_of("*?") == std::string::npos) {
    if (fs::is_regular_file(p)) out.push_back(p);
    return out;
  }
  std::error_code ec;
  for (fs::directory_iterator it(dir, ec), end; !ec && it != end; it.increment(ec)) {
    if (it->is_regular_file() && glob_match(name.c_str(), it->path().filename().string().c_str())) {
      out.push_back(it->path());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace seqls
