#pragma once

#include <string>
#include <vector>

#include "dilute/dilute_experiment.hpp"

namespace dilute {

struct PlotSeries {
  std::string label;
  std::vector<double> x, y;
  std::string color = "#1f77b4";
  bool markers = true;  ///< circles at the data points in addition to the polyline
};

struct PlotSpec {
  std::string title, xlabel, ylabel;
  bool logx = false, logy = false;
  std::vector<PlotSeries> series;
};

/// Standalone SVG document; each series is one <polyline>.
std::string render_svg(const PlotSpec& spec);

/// ε against λ₂|log λ₂| (log-log) over the final rows, with the fitted power law.
PlotSpec error_scaling_plot(const DiluteSweepReport& report);
/// Ā₁₁ against φ̂ over the final rows, with the Clausius–Mossotti line.
PlotSpec cm_plot(const DiluteSweepReport& report);

}  // namespace dilute
