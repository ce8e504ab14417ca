#include "dilute/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace dilute {

namespace {

constexpr double kWidth = 640, kHeight = 440;
constexpr double kLeft = 80, kRight = 150, kTop = 40, kBottom = 60;

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
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

struct Axis {
  double lo = 0, hi = 1;
  bool log = false;

  double map(double v) const { return ((log ? std::log10(v) : v) - lo) / (hi - lo); }
};

Axis make_axis(const std::vector<const std::vector<double>*>& data, bool log) {
  Axis a;
  a.log = log;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto* v : data)
    for (double x : *v) {
      if (!std::isfinite(x) || (log && !(x > 0))) continue;
      const double t = log ? std::log10(x) : x;
      lo = std::min(lo, t);
      hi = std::max(hi, t);
    }
  if (!std::isfinite(lo)) lo = 0, hi = 1;
  if (hi - lo < 1e-12 * (std::abs(hi) + 1)) lo -= 0.5, hi += 0.5;
  const double pad = 0.05 * (hi - lo);
  a.lo = lo - pad;
  a.hi = hi + pad;
  return a;
}

std::string tick_label(double t, bool log) {
  std::ostringstream os;
  os.precision(3);
  if (log) os << "1e" << std::lround(t);
  else os << t;
  return os.str();
}

}  // namespace

std::string render_svg(const PlotSpec& spec) {
  std::vector<const std::vector<double>*> xs, ys;
  for (const auto& s : spec.series) {
    xs.push_back(&s.x);
    ys.push_back(&s.y);
  }
  const Axis ax = make_axis(xs, spec.logx), ay = make_axis(ys, spec.logy);
  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + ax.map(x) * pw; };
  auto py = [&](double y) { return kTop + (1.0 - ay.map(y)) * ph; };

  std::ostringstream os;
  os.precision(6);
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << escape(spec.title)
     << "</text>\n"
     << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
     << "\" fill=\"none\" stroke=\"black\"/>\n";

  // ticks: integer decades on log axes, five even steps otherwise
  auto ticks = [](const Axis& a) {
    std::vector<double> t;
    if (a.log) {
      for (double v = std::ceil(a.lo); v <= a.hi; v += 1) t.push_back(v);
    } else {
      for (int k = 0; k <= 4; ++k) t.push_back(a.lo + (a.hi - a.lo) * k / 4.0);
    }
    return t;
  };
  for (double t : ticks(ax)) {
    const double x = kLeft + (t - ax.lo) / (ax.hi - ax.lo) * pw;
    os << "<line x1=\"" << x << "\" y1=\"" << kTop + ph << "\" x2=\"" << x << "\" y2=\"" << kTop + ph + 5
       << "\" stroke=\"black\"/>\n<text x=\"" << x << "\" y=\"" << kTop + ph + 20
       << "\" text-anchor=\"middle\" font-size=\"11\">" << tick_label(t, ax.log) << "</text>\n";
  }
  for (double t : ticks(ay)) {
    const double y = kTop + (1.0 - (t - ay.lo) / (ay.hi - ay.lo)) * ph;
    os << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << y << "\" x2=\"" << kLeft << "\" y2=\"" << y
       << "\" stroke=\"black\"/>\n<text x=\"" << kLeft - 8 << "\" y=\"" << y + 4
       << "\" text-anchor=\"end\" font-size=\"11\">" << tick_label(t, ay.log) << "</text>\n";
  }
  os << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 15 << "\" text-anchor=\"middle\" font-size=\"13\">"
     << escape(spec.xlabel) << "</text>\n"
     << "<text x=\"18\" y=\"" << kTop + ph / 2 << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 18 "
     << kTop + ph / 2 << ")\">" << escape(spec.ylabel) << "</text>\n";

  for (std::size_t k = 0; k < spec.series.size(); ++k) {
    const auto& s = spec.series[k];
    os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
    bool first = true;
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if ((spec.logx && !(s.x[i] > 0)) || (spec.logy && !(s.y[i] > 0))) continue;
      os << (first ? "" : " ") << px(s.x[i]) << ',' << py(s.y[i]);
      first = false;
    }
    os << "\"/>\n";
    if (s.markers)
      for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
        if ((spec.logx && !(s.x[i] > 0)) || (spec.logy && !(s.y[i] > 0))) continue;
        os << "<circle cx=\"" << px(s.x[i]) << "\" cy=\"" << py(s.y[i]) << "\" r=\"3\" fill=\"" << s.color
           << "\"/>\n";
      }
    const double ly = kTop + 16 + 18 * static_cast<double>(k);
    os << "<line x1=\"" << kLeft + pw + 10 << "\" y1=\"" << ly << "\" x2=\"" << kLeft + pw + 30 << "\" y2=\"" << ly
       << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"/>\n<text x=\"" << kLeft + pw + 35 << "\" y=\""
       << ly + 4 << "\" font-size=\"11\">" << escape(s.label) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

PlotSpec error_scaling_plot(const DiluteSweepReport& report) {
  PlotSpec spec;
  spec.title = "Dilute error against second-order intensity";
  spec.xlabel = "lambda2 |log lambda2|";
  spec.ylabel = "eps = |Abar - (A1 + phi hatA2)|";
  spec.logx = spec.logy = true;
  PlotSeries data{"measured eps", {}, {}, "#1f77b4", true};
  for (const auto& r : report.final_rows()) {
    if (!r.lambda2 || !(*r.lambda2 > 0.0) || !(*r.lambda2 < 1.0)) continue;
    data.x.push_back(lambda2_log_abscissa(*r.lambda2));
    data.y.push_back(r.eps);
  }
  spec.series.push_back(data);
  const ScalingFit fit = fit_error_scaling(report);
  if (fit.status == "ok" && !data.x.empty()) {
    std::ostringstream label;
    label.precision(3);
    label << "fit, slope " << fit.slope;
    PlotSeries line{label.str(), {}, {}, "#d62728", false};
    const auto [lo, hi] = std::minmax_element(data.x.begin(), data.x.end());
    for (double x : {*lo, *hi}) {
      line.x.push_back(x);
      line.y.push_back(fit.constant * std::pow(x, fit.slope));
    }
    spec.series.push_back(line);
  }
  return spec;
}

PlotSpec cm_plot(const DiluteSweepReport& report) {
  PlotSpec spec;
  spec.title = "Effective conductivity against volume fraction";
  spec.xlabel = "phi";
  spec.ylabel = "Abar_11";
  auto rows = report.final_rows();
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.phi < b.phi; });
  PlotSeries data{"computed Abar_11", {}, {}, "#1f77b4", true};
  PlotSeries cm{"Clausius-Mossotti", {}, {}, "#d62728", false};
  for (const auto& r : rows) {
    data.x.push_back(r.phi);
    data.y.push_back(r.abar(0, 0));
    cm.x.push_back(r.phi);
    cm.y.push_back(r.cm(0, 0));
  }
  spec.series.push_back(data);
  spec.series.push_back(cm);
  return spec;
}

}  // namespace dilute
