#include "popnet/svgplot.hpp"

#include <cstdio>

#include "popnet/errors.hpp"

namespace popnet {

std::string render_metrics_svg(
    const std::vector<std::pair<std::string, ImageMetrics>>& series) {
    if (series.empty()) throw ValidationError("plot: need at least one report");
    const int width = 640, height = 420, margin = 56;
    const int plot_w = width - 2 * margin, plot_h = height - 2 * margin;
    const char* cats[4] = {"M", "Fm", "Sm", "Em"};
    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

    std::string svg;
    char buf[512];
    auto emit = [&](const char* fmt, auto... args) {
        snprintf(buf, sizeof(buf), fmt, args...);
        svg += buf;
    };
    emit("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" "
         "viewBox=\"0 0 %d %d\">\n",
         width, height, width, height);
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    // axes and gridlines at 0, 0.25, ..., 1
    for (int i = 0; i <= 4; ++i) {
        const double y = margin + plot_h * (1.0 - i / 4.0);
        emit("<line x1=\"%d\" y1=\"%.1f\" x2=\"%d\" y2=\"%.1f\" stroke=\"#ddd\"/>\n", margin,
             y, width - margin, y);
        emit("<text x=\"%d\" y=\"%.1f\" font-size=\"11\" text-anchor=\"end\" "
             "fill=\"#444\">%.2f</text>\n",
             margin - 6, y + 4, i / 4.0);
    }
    for (int c = 0; c < 4; ++c) {
        const double x = margin + plot_w * (c / 3.0);
        emit("<text x=\"%.1f\" y=\"%d\" font-size=\"12\" text-anchor=\"middle\" "
             "fill=\"#222\">%s</text>\n",
             x, height - margin + 18, cats[c]);
    }
    for (size_t s = 0; s < series.size(); ++s) {
        const auto& [name, m] = series[s];
        const double vals[4] = {m.mae, m.max_f, m.s_measure, m.max_e};
        const char* color = palette[s % 8];
        svg += "<polyline fill=\"none\" stroke-width=\"2\" stroke=\"";
        svg += color;
        svg += "\" points=\"";
        for (int c = 0; c < 4; ++c) {
            const double x = margin + plot_w * (c / 3.0);
            const double y = margin + plot_h * (1.0 - vals[c]);
            emit("%.2f,%.2f ", x, y);
        }
        svg += "\"/>\n";
        for (int c = 0; c < 4; ++c) {
            const double x = margin + plot_w * (c / 3.0);
            const double y = margin + plot_h * (1.0 - vals[c]);
            emit("<circle cx=\"%.2f\" cy=\"%.2f\" r=\"3\" fill=\"%s\"/>\n", x, y, color);
        }
        emit("<text x=\"%d\" y=\"%zu\" font-size=\"12\" fill=\"%s\">%s</text>\n",
             width - margin - 150, margin + 16 * (s + 1), color, name.c_str());
    }
    svg += "</svg>\n";
    return svg;
}

}  // namespace popnet
