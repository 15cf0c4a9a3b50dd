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
//
// Static SVG chart emission: deterministic text output, no image libraries.

#ifndef VBT_SVG_PLOT_HPP_
#define VBT_SVG_PLOT_HPP_

#include <string>
#include <vector>

#include "vbt/metrics.hpp"

namespace vbt {

struct BarSeries {
  std::string name;
  std::vector<double> values;
};

// Grouped bar chart (one group per label, one bar per series).
void write_bar_chart_svg(const std::string& path, const std::string& title,
                         const std::vector<std::string>& labels,
                         const std::vector<BarSeries>& series);

struct LineSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

void write_line_chart_svg(const std::string& path, const std::string& title,
                          const std::string& x_label, const std::string& y_label,
                          const std::vector<LineSeries>& series);

void write_roc_svg(const std::string& path, const std::string& title, const RocCurve& curve);

void write_confusion_svg(const std::string& path, const std::string& title,
                         const ConfusionCounts& counts);

}  // namespace vbt

#endif  // VBT_SVG_PLOT_HPP_
