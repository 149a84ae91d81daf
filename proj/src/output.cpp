#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "ionwave/cli.hpp"

namespace ionwave {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

std::size_t write_csv(std::ostream& out, const std::vector<std::pair<std::string, std::string>>& provenance,
                      const std::vector<std::string>& header, const std::vector<std::vector<double>>& columns,
                      const CsvOptions& options) {
    if (header.size() != columns.size()) throw std::invalid_argument("write_csv: header and column count differ");
    const std::size_t rows = columns.empty() ? 0 : columns.front().size();
    for (const auto& c : columns)
        if (c.size() != rows) throw std::invalid_argument("write_csv: ragged columns");

    std::string text;
    if (options.provenance)
        for (const auto& [k, v] : provenance) text += "# " + k + ": " + v + "\n";
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (j) text += ',';
        text += header[j];
    }
    text += '\n';
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < columns.size(); ++j) {
            if (j) text += ',';
            text += format_double(columns[j][i]);
        }
        text += '\n';
    }
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw std::runtime_error("CSV write failed");
    return text.size();
}

std::size_t write_timeseries(const RunResult& result, std::ostream& out, const CsvOptions& options) {
    const TimeSeries& s = result.series;
    std::vector<std::string> header{"t"};
    std::vector<std::vector<double>> cols{s.times()};
    const bool chain = s.has_column("alpha_next_sq");
    const std::vector<std::string> names =
        chain ? std::vector<std::string>{"P_e", "alpha_next_sq", "bloch_norm", "excitation"}
              : std::vector<std::string>{"P_e"};
    for (const auto& n : names) {
        header.push_back(n);
        cols.push_back(s.column(n));
    }
    return write_csv(out, result.provenance, header, cols, options);
}

std::size_t write_site_populations(const RunResult& result, std::ostream& out, const CsvOptions& options) {
    if (result.site_populations.empty()) throw std::invalid_argument("no per-site snapshots in this result");
    const std::size_t n = result.site_populations.front().size();
    std::vector<std::string> header{"t"};
    std::vector<std::vector<double>> cols{result.series.times()};
    for (std::size_t k = 0; k < n; ++k) {
        header.push_back("site_" + std::to_string(k + 1));
        std::vector<double> c;
        c.reserve(result.site_populations.size());
        for (const auto& row : result.site_populations) c.push_back(row[k]);
        cols.push_back(std::move(c));
    }
    return write_csv(out, result.provenance, header, cols, options);
}

namespace {

constexpr double kWidth = 760.0;
constexpr double kPanelHeight = 340.0;
constexpr double kTitleHeight = 36.0;
constexpr double kLeft = 72.0, kRight = 150.0, kTop = 16.0, kBottom = 48.0;

const char* const kPalette[] = {"#2ca02c", "#d62728", "#1f77b4", "#000000", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string tick_label(double v, double step) {
    char buf[32];
    const int decimals = step >= 1.0 ? 0 : static_cast<int>(std::ceil(-std::log10(step) - 1e-9));
    std::snprintf(buf, sizeof buf, "%.*f", decimals, std::abs(v) < 1e-12 * step ? 0.0 : v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string r;
    for (char c : s) {
        switch (c) {
            case '&': r += "&amp;"; break;
            case '<': r += "&lt;"; break;
            case '>': r += "&gt;"; break;
            case '"': r += "&quot;"; break;
            default: r += c;
        }
    }
    return r;
}

double nice_step(double span, int target) {
    const double raw = span / target;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    const double f = raw / mag;
    return (f < 1.5 ? 1.0 : f < 3.0 ? 2.0 : f < 7.0 ? 5.0 : 10.0) * mag;
}

void render_panel(std::string& svg, const PlotPanel& panel, double y0) {
    double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
    for (const auto& s : panel.series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            xmin = std::min(xmin, s.x[i]);
            xmax = std::max(xmax, s.x[i]);
            ymin = std::min(ymin, s.y[i]);
            ymax = std::max(ymax, s.y[i]);
        }
    if (!(xmax > xmin)) {
        xmin -= 0.5;
        xmax += 0.5;
    }
    if (!std::isfinite(ymin)) ymin = 0.0, ymax = 1.0;
    ymin = std::min(ymin, 0.0);
    if (!(ymax > ymin)) ymax = ymin + 1.0;
    const double pad = 0.04 * (ymax - ymin);
    ymax += pad;
    if (ymin < 0.0) ymin -= pad;

    const double pw = kWidth - kLeft - kRight;
    const double ph = kPanelHeight - kTop - kBottom;
    const double ox = kLeft, oy = y0 + kTop;
    auto px = [&](double x) { return ox + (x - xmin) / (xmax - xmin) * pw; };
    auto py = [&](double y) { return oy + ph - (y - ymin) / (ymax - ymin) * ph; };

    svg += "<rect x=\"" + num(ox) + "\" y=\"" + num(oy) + "\" width=\"" + num(pw) + "\" height=\"" + num(ph) +
           "\" fill=\"none\" stroke=\"#444\" stroke-width=\"1\"/>\n";

    const double xs = nice_step(xmax - xmin, 6);
    for (double t = std::ceil(xmin / xs) * xs; t <= xmax + 1e-9 * xs; t += xs) {
        svg += "<line x1=\"" + num(px(t)) + "\" y1=\"" + num(oy + ph) + "\" x2=\"" + num(px(t)) + "\" y2=\"" +
               num(oy + ph + 5) + "\" stroke=\"#444\"/>\n";
        svg += "<text x=\"" + num(px(t)) + "\" y=\"" + num(oy + ph + 19) + "\" text-anchor=\"middle\">" +
               tick_label(t, xs) + "</text>\n";
    }
    const double ys = nice_step(ymax - ymin, 5);
    for (double t = std::ceil(ymin / ys) * ys; t <= ymax + 1e-9 * ys; t += ys) {
        svg += "<line x1=\"" + num(ox - 5) + "\" y1=\"" + num(py(t)) + "\" x2=\"" + num(ox) + "\" y2=\"" +
               num(py(t)) + "\" stroke=\"#444\"/>\n";
        svg += "<text x=\"" + num(ox - 8) + "\" y=\"" + num(py(t) + 4) + "\" text-anchor=\"end\">" +
               tick_label(t, ys) + "</text>\n";
    }
    svg += "<text x=\"" + num(ox + pw / 2) + "\" y=\"" + num(oy + ph + 38) + "\" text-anchor=\"middle\">" +
           escape(panel.x_label) + "</text>\n";
    svg += "<text transform=\"translate(" + num(ox - 50) + "," + num(oy + ph / 2) +
           ") rotate(-90)\" text-anchor=\"middle\">" + escape(panel.y_label) + "</text>\n";

    for (std::size_t k = 0; k < panel.series.size(); ++k) {
        const PlotSeries& s = panel.series[k];
        const char* colour = kPalette[k % std::size(kPalette)];
        svg += "<polyline fill=\"none\" stroke=\"" + std::string(colour) + "\" stroke-width=\"1.6\"";
        if (s.dashed) svg += " stroke-dasharray=\"6,4\"";
        svg += " points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            if (i) svg += ' ';
            svg += num(px(s.x[i])) + "," + num(py(s.y[i]));
        }
        svg += "\"/>\n";
        const double ly = oy + 14 + 20.0 * static_cast<double>(k);
        const double lx = ox + pw + 14;
        svg += "<line x1=\"" + num(lx) + "\" y1=\"" + num(ly - 4) + "\" x2=\"" + num(lx + 28) + "\" y2=\"" +
               num(ly - 4) + "\" stroke=\"" + colour + "\" stroke-width=\"1.6\"" +
               (s.dashed ? " stroke-dasharray=\"6,4\"" : "") + "/>\n";
        svg += "<text x=\"" + num(lx + 34) + "\" y=\"" + num(ly) + "\">" + escape(s.label) + "</text>\n";
    }
}

}  // namespace

std::string render_svg(const Figure& figure) {
    if (figure.panels.empty()) throw std::invalid_argument("emit_plot: nothing to plot");
    for (const auto& p : figure.panels) {
        if (p.series.empty()) throw std::invalid_argument("emit_plot: panel without series");
        for (const auto& s : p.series) {
            if (s.x.empty()) throw std::invalid_argument("emit_plot: series '" + s.label + "' is empty");
            if (s.x.size() != s.y.size()) throw std::invalid_argument("emit_plot: series '" + s.label + "' is ragged");
        }
    }
    const double height = kTitleHeight + kPanelHeight * static_cast<double>(figure.panels.size());
    std::string svg = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" + num(height) +
           "\" viewBox=\"0 0 " + num(kWidth) + " " + num(height) +
           "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg += "<text x=\"" + num(kWidth / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" +
           escape(figure.title) + "</text>\n";
    for (std::size_t i = 0; i < figure.panels.size(); ++i)
        render_panel(svg, figure.panels[i], kTitleHeight + kPanelHeight * static_cast<double>(i));
    svg += "</svg>\n";
    return svg;
}

void emit_plot(const Figure& figure, const std::filesystem::path& path) {
    const std::string svg = render_svg(figure);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write plot '" + path.string() + "'");
    out.write(svg.data(), static_cast<std::streamsize>(svg.size()));
    if (!out) throw std::runtime_error("write failed for plot '" + path.string() + "'");
}

}  // namespace ionwave
