#include "icurisk/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "icurisk/rng.hpp"

namespace icurisk {

namespace {

const char* const kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string dash_attr(const std::string& dash) { return dash.empty() ? "" : " stroke-dasharray=\"" + dash + "\""; }

// Blue (low) to red (high).
std::string ramp(double t) {
  t = std::clamp(t, 0.0, 1.0);
  const int r = static_cast<int>(std::lround(30 + 200 * t));
  const int g = static_cast<int>(std::lround(80 + 20 * (1.0 - std::abs(2.0 * t - 1.0))));
  const int b = static_cast<int>(std::lround(230 - 200 * t));
  char buf[16];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
  return buf;
}

std::pair<double, double> padded(double lo, double hi) {
  if (!(hi > lo)) return {lo - 1.0, hi + 1.0};
  const double pad = 0.05 * (hi - lo);
  return {lo - pad, hi + pad};
}

}  // namespace

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fmt2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v == 0.0 ? 0.0 : v);
  return buf;
}

SvgPlot::SvgPlot(double width, double height, std::string title)
    : width_(width), height_(height), title_(std::move(title)) {}

void SvgPlot::set_margins(double left, double right, double top, double bottom) {
  left_ = left;
  right_ = right;
  top_ = top;
  bottom_ = bottom;
}

void SvgPlot::set_domain(double x0, double x1, double y0, double y1) {
  x0_ = x0;
  x1_ = x1 > x0 ? x1 : x0 + 1.0;
  y0_ = y0;
  y1_ = y1 > y0 ? y1 : y0 + 1.0;
}

double SvgPlot::px(double x) const { return left() + (x - x0_) / (x1_ - x0_) * (right() - left()); }
double SvgPlot::py(double y) const { return bottom() - (y - y0_) / (y1_ - y0_) * (bottom() - top()); }

void SvgPlot::axes(const std::string& xlabel, const std::string& ylabel, int ticks) {
  line(left(), bottom(), right(), bottom(), "#333");
  line(left(), bottom(), left(), top(), "#333");
  for (int i = 0; i <= ticks; ++i) {
    const double fx = x0_ + (x1_ - x0_) * i / ticks;
    const double fy = y0_ + (y1_ - y0_) * i / ticks;
    line(px(fx), bottom(), px(fx), bottom() + 5, "#333");
    text_px(px(fx), bottom() + 18, fmt2(fx), "middle", 10);
    line(left() - 5, py(fy), left(), py(fy), "#333");
    text_px(left() - 8, py(fy) + 3, fmt2(fy), "end", 10);
  }
  text_px((left() + right()) / 2, height_ - 12, xlabel, "middle");
  body_ += "<text x=\"16\" y=\"" + fmt2((top() + bottom()) / 2) + "\" transform=\"rotate(-90 16 " +
           fmt2((top() + bottom()) / 2) + ")\" text-anchor=\"middle\" font-size=\"12\">" + xml_escape(ylabel) +
           "</text>\n";
}

void SvgPlot::polyline(const std::vector<double>& xs, const std::vector<double>& ys, const std::string& color,
                       double stroke, const std::string& dash) {
  std::string pts;
  for (std::size_t i = 0; i < xs.size(); ++i) pts += (i ? " " : "") + fmt2(px(xs[i])) + "," + fmt2(py(ys[i]));
  body_ += "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"" + fmt2(stroke) + "\"" +
           dash_attr(dash) + " points=\"" + pts + "\"/>\n";
}

void SvgPlot::circle(double x, double y, double r, const std::string& fill, double opacity) {
  body_ += "<circle cx=\"" + fmt2(px(x)) + "\" cy=\"" + fmt2(y) + "\" r=\"" + fmt2(r) + "\" fill=\"" + fill +
           "\" fill-opacity=\"" + fmt2(opacity) + "\"/>\n";
}

void SvgPlot::rect(double x0, double y0, double x1, double y1, const std::string& fill) {
  body_ += "<rect x=\"" + fmt2(std::min(x0, x1)) + "\" y=\"" + fmt2(std::min(y0, y1)) + "\" width=\"" +
           fmt2(std::abs(x1 - x0)) + "\" height=\"" + fmt2(std::abs(y1 - y0)) + "\" fill=\"" + fill + "\"/>\n";
}

void SvgPlot::line(double x0, double y0, double x1, double y1, const std::string& color, double stroke,
                   const std::string& dash) {
  body_ += "<line x1=\"" + fmt2(x0) + "\" y1=\"" + fmt2(y0) + "\" x2=\"" + fmt2(x1) + "\" y2=\"" + fmt2(y1) +
           "\" stroke=\"" + color + "\" stroke-width=\"" + fmt2(stroke) + "\"" + dash_attr(dash) + "/>\n";
}

void SvgPlot::text_px(double x, double y, const std::string& s, const std::string& anchor, int size) {
  body_ += "<text x=\"" + fmt2(x) + "\" y=\"" + fmt2(y) + "\" text-anchor=\"" + anchor + "\" font-size=\"" +
           std::to_string(size) + "\">" + xml_escape(s) + "</text>\n";
}

std::string SvgPlot::str() const {
  return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
         fmt2(width_) + "\" height=\"" + fmt2(height_) + "\" viewBox=\"0 0 " + fmt2(width_) + " " + fmt2(height_) +
         "\" font-family=\"sans-serif\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n<text x=\"" +
         fmt2(width_ / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" + xml_escape(title_) +
         "</text>\n" + body_ + "</svg>\n";
}

std::string roc_svg(const std::vector<NamedRoc>& curves) {
  SvgPlot p(640, 520, "ROC, test set");
  p.set_domain(0, 1, 0, 1);
  p.axes("False positive rate", "True positive rate");
  p.polyline({0, 1}, {0, 1}, "#999", 1.0, "4,4");
  for (std::size_t i = 0; i < curves.size(); ++i) {
    std::vector<double> xs, ys;
    for (const auto& pt : curves[i].points) {
      xs.push_back(pt.fpr);
      ys.push_back(pt.tpr);
    }
    const std::string color = kPalette[i % 8];
    p.polyline(xs, ys, color);
    const double ly = p.bottom() - 20.0 - 16.0 * static_cast<double>(curves.size() - 1 - i);
    p.line(p.px(0.55), ly, p.px(0.62), ly, color, 2.0);
    p.text_px(p.px(0.64), ly + 4, curves[i].name, "start", 11);
  }
  return p.str();
}

std::string ablation_svg(const AblationReport& r) {
  const double row_h = 22.0;
  const double height = 90.0 + row_h * static_cast<double>(r.entries.size());
  SvgPlot p(720, height, "AUROC with one feature removed (" + r.model + ")");
  p.set_margins(230, 30, 40, 50);
  double lo = r.baseline_mean - r.baseline_sd, hi = r.baseline_mean + r.baseline_sd;
  for (const auto& e : r.entries) {
    if (e.distribution.empty()) continue;
    lo = std::min(lo, e.mean - e.sd);
    hi = std::max(hi, e.mean + e.sd);
  }
  const auto [a, b] = padded(lo, hi);
  p.set_domain(a, b, 0, 1);
  p.line(p.left(), p.bottom(), p.right(), p.bottom(), "#333");
  for (int i = 0; i <= 4; ++i) {
    const double v = a + (b - a) * i / 4;
    p.line(p.px(v), p.bottom(), p.px(v), p.bottom() + 5, "#333");
    p.text_px(p.px(v), p.bottom() + 18, fmt2(v), "middle", 10);
  }
  p.text_px((p.left() + p.right()) / 2, height - 10, "Bootstrap AUROC (mean +/- sd)", "middle");
  p.line(p.px(r.baseline_mean), p.top(), p.px(r.baseline_mean), p.bottom(), "#d62728", 1.5, "5,3");
  for (std::size_t i = 0; i < r.entries.size(); ++i) {
    const auto& e = r.entries[i];
    const double y = p.top() + row_h * (static_cast<double>(i) + 0.5);
    p.text_px(p.left() - 8, y + 4, e.feature, "end", 11);
    if (e.distribution.empty()) continue;
    p.line(p.px(e.mean - e.sd), y, p.px(e.mean + e.sd), y, "#1f77b4", 2.0);
    p.circle(e.mean, y, 4.0, "#1f77b4", 1.0);
  }
  return p.str();
}

std::string shap_beeswarm_svg(const std::vector<std::string>& features, const Matrix& phi, const Matrix& values) {
  const std::size_t d = features.size(), n = phi.rows();
  std::vector<double> importance(d, 0.0);
  double lo = 0.0, hi = 0.0;
  for (std::size_t j = 0; j < d; ++j)
    for (std::size_t r = 0; r < n; ++r) {
      importance[j] += std::abs(phi(r, j));
      lo = std::min(lo, phi(r, j));
      hi = std::max(hi, phi(r, j));
    }
  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return importance[a] > importance[b]; });

  const double row_h = 26.0;
  const double height = 90.0 + row_h * static_cast<double>(d);
  SvgPlot p(760, height, "SHAP values (log-odds)");
  p.set_margins(230, 30, 40, 50);
  const auto [a, b] = padded(lo, hi);
  p.set_domain(a, b, 0, 1);
  p.line(p.left(), p.bottom(), p.right(), p.bottom(), "#333");
  for (int i = 0; i <= 4; ++i) {
    const double v = a + (b - a) * i / 4;
    p.line(p.px(v), p.bottom(), p.px(v), p.bottom() + 5, "#333");
    p.text_px(p.px(v), p.bottom() + 18, fmt2(v), "middle", 10);
  }
  p.text_px((p.left() + p.right()) / 2, height - 10, "SHAP value; color: feature value (blue low, red high)", "middle");
  p.line(p.px(0.0), p.top(), p.px(0.0), p.bottom(), "#999", 1.0, "3,3");
  for (std::size_t k = 0; k < d; ++k) {
    const std::size_t j = order[k];
    const double y = p.top() + row_h * (static_cast<double>(k) + 0.5);
    p.text_px(p.left() - 8, y + 4, features[j], "end", 11);
    std::vector<double> col = values.column(j);
    std::vector<double> sorted = col;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t r = 0; r < n; ++r) {
      const auto rank = static_cast<double>(std::lower_bound(sorted.begin(), sorted.end(), col[r]) - sorted.begin());
      const double t = n > 1 ? rank / static_cast<double>(n - 1) : 0.5;
      // Deterministic jitter from the (row, feature) pair.
      const double jitter = (static_cast<double>(mix64(r * 1315423911ULL + j) >> 11) * 0x1.0p-53 - 0.5) * row_h * 0.7;
      p.circle(phi(r, j), y + jitter, 2.2, ramp(t), 0.6);
    }
  }
  return p.str();
}

std::string ale_svg(const AleCurve& c) {
  SvgPlot p(640, 440, "ALE: " + c.feature);
  double lo = 0.0, hi = 0.0;
  for (double e : c.effects) {
    lo = std::min(lo, e);
    hi = std::max(hi, e);
  }
  const auto [ya, yb] = padded(lo, hi);
  const auto [xa, xb] = padded(c.edges.front(), c.edges.back());
  p.set_domain(xa, xb, ya, yb);
  p.axes(c.feature, "Accumulated local effect (log-odds)");
  if (c.binary) {
    for (std::size_t k = 0; k < c.edges.size(); ++k) p.circle(c.edges[k], p.py(c.effects[k]), 5.0, "#1f77b4", 1.0);
    p.polyline(c.edges, c.effects, "#1f77b4", 1.0, "4,3");
  } else {
    p.polyline(c.edges, c.effects, "#1f77b4", 2.0);
  }
  for (double e : c.edges) p.line(p.px(e), p.bottom(), p.px(e), p.bottom() - 8, "#555");
  return p.str();
}

std::string histogram_svg(const std::vector<double>& samples, double mean, double low, double high,
                          const std::string& title, std::size_t bins) {
  SvgPlot p(640, 440, title);
  double lo = 0.0, hi = 1.0;
  std::vector<std::size_t> counts(bins, 0);
  for (double s : samples) {
    auto b = static_cast<std::size_t>(std::floor((s - lo) / (hi - lo) * static_cast<double>(bins)));
    counts[std::min(b, bins - 1)] += 1;
  }
  const double max_count = static_cast<double>(std::max<std::size_t>(1, *std::max_element(counts.begin(), counts.end())));
  const double total = static_cast<double>(std::max<std::size_t>(samples.size(), 1));
  p.set_domain(lo, hi, 0.0, max_count / total * 1.05);
  p.axes("Predicted 30-day mortality risk", "Fraction of samples");
  for (std::size_t b = 0; b < bins; ++b) {
    const double x0 = lo + (hi - lo) * static_cast<double>(b) / static_cast<double>(bins);
    const double x1 = lo + (hi - lo) * static_cast<double>(b + 1) / static_cast<double>(bins);
    p.rect(p.px(x0) + 0.5, p.py(0.0), p.px(x1) - 0.5, p.py(static_cast<double>(counts[b]) / total), "#9ecae1");
  }
  p.line(p.px(mean), p.top(), p.px(mean), p.bottom(), "#d62728", 2.0);
  p.line(p.px(low), p.top(), p.px(low), p.bottom(), "#555", 1.0, "4,3");
  p.line(p.px(high), p.top(), p.px(high), p.bottom(), "#555", 1.0, "4,3");
  p.text_px(p.right(), p.top() + 12, "mean " + fmt2(mean) + ", 95% [" + fmt2(low) + ", " + fmt2(high) + "]", "end", 11);
  return p.str();
}

}  // namespace icurisk
