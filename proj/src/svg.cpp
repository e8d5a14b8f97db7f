#include "gxe/svg.hpp"

#include <algorithm>
#include <cmath>

#include "gxe/error.hpp"
#include "gxe/tsv.hpp"

namespace gxe {

namespace {
constexpr double kWidth = 640.0, kHeight = 480.0, kMargin = 56.0;

std::string num(double v) { return format_double(v); }

void open_doc(std::string& s, const std::string& title) {
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) +
         "\" height=\"" + num(kHeight) + "\" viewBox=\"0 0 " + num(kWidth) +
         " " + num(kHeight) + "\">\n";
    s += "<rect width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) +
         "\" fill=\"white\"/>\n";
    s += "<text x=\"" + num(kWidth / 2) + "\" y=\"24\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"16\">" + title + "</text>\n";
    // Axis lines of the plot frame.
    s += "<line x1=\"" + num(kMargin) + "\" y1=\"" + num(kHeight - kMargin) +
         "\" x2=\"" + num(kWidth - kMargin) + "\" y2=\"" +
         num(kHeight - kMargin) + "\" stroke=\"black\"/>\n";
    s += "<line x1=\"" + num(kMargin) + "\" y1=\"" + num(kMargin) + "\" x2=\"" +
         num(kMargin) + "\" y2=\"" + num(kHeight - kMargin) +
         "\" stroke=\"black\"/>\n";
}
}  // namespace

std::string roc_svg(const RocCurve& curve, const std::string& title) {
    if (curve.fpr.size() != curve.tpr.size() || curve.fpr.empty()) {
        throw ConfigError("roc_svg: malformed curve");
    }
    const double w = kWidth - 2 * kMargin, h = kHeight - 2 * kMargin;
    auto px = [&](double x) { return kMargin + x * w; };
    auto py = [&](double y) { return kHeight - kMargin - y * h; };

    std::string s;
    open_doc(s, title);
    s += "<line x1=\"" + num(px(0)) + "\" y1=\"" + num(py(0)) + "\" x2=\"" +
         num(px(1)) + "\" y2=\"" + num(py(1)) +
         "\" stroke=\"gray\" stroke-dasharray=\"4 4\"/>\n";
    s += "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < curve.fpr.size(); ++i) {
        if (i) s += ' ';
        s += num(px(curve.fpr[i])) + "," + num(py(curve.tpr[i]));
    }
    s += "\"/>\n</svg>\n";
    return s;
}

std::string manhattan_svg(std::span<const double> positions,
                          std::span<const double> neglog10_p,
                          std::optional<double> causal_position,
                          const std::string& title) {
    if (positions.size() != neglog10_p.size()) {
        throw ConfigError("manhattan_svg: positions and p-values differ in length");
    }
    double xmin = 0.0, xmax = 1.0, ymax = 1.0;
    bool any = false;
    for (std::size_t i = 0; i < positions.size(); ++i) {
        if (!std::isfinite(neglog10_p[i])) continue;
        if (!any) {
            xmin = xmax = positions[i];
            ymax = neglog10_p[i];
            any = true;
        } else {
            xmin = std::min(xmin, positions[i]);
            xmax = std::max(xmax, positions[i]);
            ymax = std::max(ymax, neglog10_p[i]);
        }
    }
    if (causal_position) {
        xmin = std::min(xmin, *causal_position);
        xmax = std::max(xmax, *causal_position);
    }
    if (xmax <= xmin) xmax = xmin + 1.0;
    ymax = std::max(ymax, 1.0);

    const double w = kWidth - 2 * kMargin, h = kHeight - 2 * kMargin;
    auto px = [&](double x) { return kMargin + (x - xmin) / (xmax - xmin) * w; };
    auto py = [&](double y) { return kHeight - kMargin - y / ymax * h; };

    std::string s;
    open_doc(s, title);
    if (causal_position) {
        s += "<line x1=\"" + num(px(*causal_position)) + "\" y1=\"" +
             num(kMargin) + "\" x2=\"" + num(px(*causal_position)) + "\" y2=\"" +
             num(kHeight - kMargin) +
             "\" stroke=\"crimson\" stroke-dasharray=\"6 3\"/>\n";
    }
    for (std::size_t i = 0; i < positions.size(); ++i) {
        if (!std::isfinite(neglog10_p[i])) continue;
        s += "<circle cx=\"" + num(px(positions[i])) + "\" cy=\"" +
             num(py(neglog10_p[i])) + "\" r=\"2.5\" fill=\"steelblue\"/>\n";
    }
    s += "</svg>\n";
    return s;
}

}  // namespace gxe
