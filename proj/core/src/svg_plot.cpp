// Copyright 2026 The vbt Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "vbt/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "vbt/error.hpp"

namespace vbt {
namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 420.0;
constexpr double kMarginLeft = 60.0;
constexpr double kMarginRight = 20.0;
constexpr double kMarginTop = 40.0;
constexpr double kMarginBottom = 60.0;

const char* kPalette[6] = {"#4878d0", "#ee854a", "#6acc64", "#d65f5f", "#956cb4", "#8c613c"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

struct Canvas {
  std::ofstream f;

  explicit Canvas(const std::string& path, const std::string& title) : f(path) {
    if (!f) throw ComputeError("cannot write SVG: " + path);
    f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
    f << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    f << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"15\">" << title << "</text>\n";
  }
  ~Canvas() { f << "</svg>\n"; }

  void axes() {
    f << "<line x1=\"" << kMarginLeft << "\" y1=\"" << kHeight - kMarginBottom << "\" x2=\""
      << kWidth - kMarginRight << "\" y2=\"" << kHeight - kMarginBottom
      << "\" stroke=\"black\"/>\n";
    f << "<line x1=\"" << kMarginLeft << "\" y1=\"" << kMarginTop << "\" x2=\"" << kMarginLeft
      << "\" y2=\"" << kHeight - kMarginBottom << "\" stroke=\"black\"/>\n";
  }
  void text(double x, double y, const std::string& s, const std::string& anchor = "middle",
            int size = 11) {
    f << "<text x=\"" << num(x) << "\" y=\"" << num(y) << "\" text-anchor=\"" << anchor
      << "\" font-family=\"sans-serif\" font-size=\"" << size << "\">" << s << "</text>\n";
  }
};

double plot_w() { return kWidth - kMarginLeft - kMarginRight; }
double plot_h() { return kHeight - kMarginTop - kMarginBottom; }

}  // namespace

void write_bar_chart_svg(const std::string& path, const std::string& title,
                         const std::vector<std::string>& labels,
                         const std::vector<BarSeries>& series) {
  if (labels.empty() || series.empty()) throw ValidationError("empty bar chart");
  double max_v = 0.0;
  for (const BarSeries& s : series) {
    if (s.values.size() != labels.size()) throw ValidationError("bar series length mismatch");
    for (double v : s.values) max_v = std::max(max_v, v);
  }
  if (max_v <= 0.0) max_v = 1.0;

  Canvas c(path, title);
  c.axes();
  const double group_w = plot_w() / static_cast<double>(labels.size());
  const double bar_w = group_w * 0.8 / static_cast<double>(series.size());
  for (std::size_t g = 0; g < labels.size(); ++g) {
    for (std::size_t s = 0; s < series.size(); ++s) {
      const double v = series[s].values[g];
      const double h = v / max_v * plot_h();
      const double x = kMarginLeft + group_w * static_cast<double>(g) + group_w * 0.1 +
                       bar_w * static_cast<double>(s);
      const double y = kHeight - kMarginBottom - h;
      c.f << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"" << num(bar_w)
          << "\" height=\"" << num(h) << "\" fill=\"" << kPalette[s % 6] << "\"/>\n";
    }
    c.text(kMarginLeft + group_w * (static_cast<double>(g) + 0.5),
           kHeight - kMarginBottom + 16, labels[g]);
  }
  for (int tick = 0; tick <= 4; ++tick) {
    const double v = max_v * tick / 4.0;
    const double y = kHeight - kMarginBottom - plot_h() * tick / 4.0;
    c.text(kMarginLeft - 8, y + 4, num(v), "end");
  }
  for (std::size_t s = 0; s < series.size(); ++s) {
    const double y = kMarginTop + 14.0 * static_cast<double>(s);
    c.f << "<rect x=\"" << num(kWidth - kMarginRight - 130) << "\" y=\"" << num(y - 9)
        << "\" width=\"10\" height=\"10\" fill=\"" << kPalette[s % 6] << "\"/>\n";
    c.text(kWidth - kMarginRight - 115, y, series[s].name, "start");
  }
}

void write_line_chart_svg(const std::string& path, const std::string& title,
                          const std::string& x_label, const std::string& y_label,
                          const std::vector<LineSeries>& series) {
  if (series.empty()) throw ValidationError("empty line chart");
  double x_min = 1e300, x_max = -1e300, y_min = 1e300, y_max = -1e300;
  for (const LineSeries& s : series) {
    if (s.x.size() != s.y.size() || s.x.empty()) throw ValidationError("bad line series");
    for (double v : s.x) {
      x_min = std::min(x_min, v);
      x_max = std::max(x_max, v);
    }
    for (double v : s.y) {
      y_min = std::min(y_min, v);
      y_max = std::max(y_max, v);
    }
  }
  if (x_max == x_min) x_max = x_min + 1.0;
  if (y_max == y_min) y_max = y_min + 1.0;

  Canvas c(path, title);
  c.axes();
  auto px = [&](double x) { return kMarginLeft + (x - x_min) / (x_max - x_min) * plot_w(); };
  auto py = [&](double y) {
    return kHeight - kMarginBottom - (y - y_min) / (y_max - y_min) * plot_h();
  };
  for (std::size_t s = 0; s < series.size(); ++s) {
    c.f << "<polyline fill=\"none\" stroke=\"" << kPalette[s % 6] << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < series[s].x.size(); ++i) {
      c.f << num(px(series[s].x[i])) << ',' << num(py(series[s].y[i])) << ' ';
    }
    c.f << "\"/>\n";
    if (series.size() > 1) {
      const double y = kMarginTop + 14.0 * static_cast<double>(s);
      c.f << "<rect x=\"" << num(kWidth - kMarginRight - 130) << "\" y=\"" << num(y - 9)
          << "\" width=\"10\" height=\"10\" fill=\"" << kPalette[s % 6] << "\"/>\n";
      c.text(kWidth - kMarginRight - 115, y, series[s].name, "start");
    }
  }
  c.text(kWidth / 2, kHeight - 16, x_label);
  c.text(16, kHeight / 2, y_label, "middle");
  c.text(kMarginLeft - 8, py(y_min) + 4, num(y_min), "end");
  c.text(kMarginLeft - 8, py(y_max) + 4, num(y_max), "end");
  c.text(px(x_min), kHeight - kMarginBottom + 16, num(x_min));
  c.text(px(x_max), kHeight - kMarginBottom + 16, num(x_max));
}

void write_roc_svg(const std::string& path, const std::string& title, const RocCurve& curve) {
  Canvas c(path, title + " (AUROC " + num(curve.auroc) + ")");
  c.axes();
  auto px = [&](double x) { return kMarginLeft + x * plot_w(); };
  auto py = [&](double y) { return kHeight - kMarginBottom - y * plot_h(); };
  c.f << "<line x1=\"" << num(px(0)) << "\" y1=\"" << num(py(0)) << "\" x2=\"" << num(px(1))
      << "\" y2=\"" << num(py(1)) << "\" stroke=\"#bbbbbb\" stroke-dasharray=\"4 3\"/>\n";
  c.f << "<polyline fill=\"none\" stroke=\"" << kPalette[0] << "\" stroke-width=\"2\" points=\"";
  for (std::size_t i = 0; i < curve.fpr.size(); ++i) {
    c.f << num(px(curve.fpr[i])) << ',' << num(py(curve.tpr[i])) << ' ';
  }
  c.f << "\"/>\n";
  c.text(kWidth / 2, kHeight - 16, "false positive rate");
  c.text(16, kHeight / 2, "tpr");
  for (int tick = 0; tick <= 4; ++tick) {
    const double v = tick / 4.0;
    c.text(kMarginLeft - 8, py(v) + 4, num(v), "end");
    c.text(px(v), kHeight - kMarginBottom + 16, num(v));
  }
}

void write_confusion_svg(const std::string& path, const std::string& title,
                         const ConfusionCounts& counts) {
  Canvas c(path, title);
  const double cell = std::min(plot_w(), plot_h()) / 2.0;
  const double x0 = kMarginLeft + (plot_w() - 2 * cell) / 2.0;
  const double y0 = kMarginTop + (plot_h() - 2 * cell) / 2.0;
  const long values[2][2] = {{counts.tp, counts.fn}, {counts.fp, counts.tn}};
  const long max_v = std::max({counts.tp, counts.fn, counts.fp, counts.tn, 1L});
  const char* row_names[2] = {"actual +", "actual -"};
  const char* col_names[2] = {"pred +", "pred -"};
  for (int r = 0; r < 2; ++r) {
    for (int col = 0; col < 2; ++col) {
      const double shade = 1.0 - 0.75 * static_cast<double>(values[r][col]) /
                                     static_cast<double>(max_v);
      const int tone = static_cast<int>(std::lround(255.0 * shade));
      c.f << "<rect x=\"" << num(x0 + col * cell) << "\" y=\"" << num(y0 + r * cell)
          << "\" width=\"" << num(cell) << "\" height=\"" << num(cell) << "\" fill=\"rgb("
          << tone << "," << tone << ",255)\" stroke=\"black\"/>\n";
      c.text(x0 + col * cell + cell / 2, y0 + r * cell + cell / 2 + 5,
             std::to_string(values[r][col]), "middle", 16);
    }
    c.text(x0 - 10, y0 + r * cell + cell / 2 + 4, row_names[r], "end");
  }
  for (int col = 0; col < 2; ++col) {
    c.text(x0 + col * cell + cell / 2, y0 - 8, col_names[col]);
  }
}

}  // namespace vbt
