#pragma once

#include <string>
#include <vector>

#include "icurisk/ablation.hpp"
#include "icurisk/ale.hpp"
#include "icurisk/matrix.hpp"
#include "icurisk/metrics.hpp"

namespace icurisk {

/// Minimal SVG canvas with a linear data-to-pixel mapping.
class SvgPlot {
 public:
  SvgPlot(double width, double height, std::string title);

  void set_domain(double x0, double x1, double y0, double y1);
  double px(double x) const;
  double py(double y) const;

  void axes(const std::string& xlabel, const std::string& ylabel, int ticks = 5);
  void polyline(const std::vector<double>& xs, const std::vector<double>& ys, const std::string& color,
                double stroke = 1.5, const std::string& dash = "");
  /// x in data units, y in pixels (rows of dot plots are laid out in pixels).
  void circle(double x, double y, double r, const std::string& fill, double opacity = 0.7);
  void rect(double x0, double y0, double x1, double y1, const std::string& fill);
  void line(double x0, double y0, double x1, double y1, const std::string& color, double stroke = 1.0,
            const std::string& dash = "");
  /// Position in pixels.
  void text_px(double x, double y, const std::string& s, const std::string& anchor = "start", int size = 12);

  double left() const { return left_; }
  double right() const { return width_ - right_; }
  double top() const { return top_; }
  double bottom() const { return height_ - bottom_; }
  void set_margins(double left, double right, double top, double bottom);

  std::string str() const;

 private:
  double width_, height_;
  double left_ = 70, right_ = 20, top_ = 40, bottom_ = 55;
  double x0_ = 0, x1_ = 1, y0_ = 0, y1_ = 1;
  std::string title_;
  std::string body_;
};

std::string xml_escape(const std::string& s);
/// Fixed two-decimal formatting used for every coordinate.
std::string fmt2(double v);

struct NamedRoc {
  std::string name;
  std::vector<RocPoint> points;
};

std::string roc_svg(const std::vector<NamedRoc>& curves);
std::string ablation_svg(const AblationReport& report);
/// One row per feature (largest mean |phi| on top); points colored by the
/// within-feature rank of the feature value.
std::string shap_beeswarm_svg(const std::vector<std::string>& features, const Matrix& phi, const Matrix& values);
std::string ale_svg(const AleCurve& curve);
std::string histogram_svg(const std::vector<double>& samples, double mean, double low, double high,
                          const std::string& title, std::size_t bins = 30);

}  // namespace icurisk
