#include "fnbound/harness/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "fnbound/errors.hpp"

namespace fnb::harness {

std::string format_number(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
    if (ec != std::errc{}) throw std::runtime_error("format_number: conversion failed");
    return std::string(buf, end);
}

std::string csv_field(const std::string& text) {
    if (text.find_first_of(",\"\r\n") == std::string::npos) return text;
    std::string out = "\"";
    for (char ch : text) {
        if (ch == '"') out += '"';
        out += ch;
    }
    out += '"';
    return out;
}

void write_report_csv(std::ostream& out, std::span<const ReportRow> rows) {
    out << report_header << '\n';
    for (const auto& r : rows) {
        if (!(r.test_acc >= 0.0 && r.test_acc <= 1.0))
            throw DataError("report row " + r.run_id + ": accuracy outside [0, 1]");
        out << csv_field(r.run_id) << ',' << r.label_noise << ',' << format_number(r.delta) << ','
            << r.feature_noise << ',' << format_number(r.noise_param) << ','
            << (r.severity ? std::to_string(*r.severity) : std::string()) << ',' << r.epoch << ','
            << format_number(r.train_loss) << ',' << format_number(r.test_acc) << ',' << r.seed << '\n';
    }
}

void write_csv(std::ostream& out, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
    auto line = [&](const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) out << ',';
            out << csv_field(fields[i]);
        }
        out << '\n';
    };
    line(header);
    for (const auto& r : rows) {
        if (r.size() != header.size()) throw ShapeError("write_csv: row width differs from header");
        line(r);
    }
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError(path.string() + ": cannot open for writing");
    out << content;
    if (!out) throw ConfigError(path.string() + ": write failed");
}

std::vector<std::uint8_t> encode_pgm(std::span<const double> values, std::size_t height, std::size_t width) {
    if (height == 0 || width == 0 || values.size() != height * width)
        throw ShapeError("encode_pgm: " + std::to_string(values.size()) + " values for a " + std::to_string(height) +
                         "x" + std::to_string(width) + " image");
    const std::string header = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    const double range = *hi - *lo;
    for (double v : values) {
        const double scaled = range > 0.0 ? 255.0 * (v - *lo) / range : 0.0;
        out.push_back(static_cast<std::uint8_t>(std::lround(std::clamp(scaled, 0.0, 255.0))));
    }
    return out;
}

namespace {

constexpr double chart_w = 640, chart_h = 400, margin_l = 70, margin_r = 160, margin_t = 40, margin_b = 50;
constexpr const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};

std::string escape_xml(const std::string& s) {
    std::string out;
    for (char ch : s) {
        switch (ch) {
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '&': out += "&amp;"; break;
        case '"': out += "&quot;"; break;
        default: out += ch;
        }
    }
    return out;
}

std::string tick_label(double v) {
    std::ostringstream s;
    s.imbue(std::locale::classic());
    s.precision(3);
    s << v;
    return s.str();
}

} // namespace

std::string render_line_chart_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                                  const std::vector<Series>& series) {
    double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
    for (const auto& s : series) {
        for (double x : s.x) x0 = std::min(x0, x), x1 = std::max(x1, x);
        for (double y : s.y)
            if (std::isfinite(y)) y0 = std::min(y0, y), y1 = std::max(y1, y);
    }
    if (!(x0 <= x1)) x0 = 0, x1 = 1;
    if (!(y0 <= y1)) y0 = 0, y1 = 1;
    if (x1 == x0) x1 = x0 + 1;
    if (y1 == y0) y1 = y0 + 1;
    const double pw = chart_w - margin_l - margin_r, ph = chart_h - margin_t - margin_b;
    auto px = [&](double x) { return margin_l + (x - x0) / (x1 - x0) * pw; };
    auto py = [&](double y) { return margin_t + (1.0 - (y - y0) / (y1 - y0)) * ph; };

    std::ostringstream o;
    o.imbue(std::locale::classic());
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << chart_w << "\" height=\"" << chart_h
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << chart_w / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape_xml(title)
      << "</text>\n"
      << "<rect x=\"" << margin_l << "\" y=\"" << margin_t << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double xv = x0 + (x1 - x0) * i / 4.0, yv = y0 + (y1 - y0) * i / 4.0;
        o << "<text x=\"" << px(xv) << "\" y=\"" << margin_t + ph + 16 << "\" text-anchor=\"middle\">"
          << tick_label(xv) << "</text>\n"
          << "<text x=\"" << margin_l - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">" << tick_label(yv)
          << "</text>\n";
    }
    o << "<text x=\"" << margin_l + pw / 2 << "\" y=\"" << chart_h - 10 << "\" text-anchor=\"middle\">"
      << escape_xml(x_label) << "</text>\n"
      << "<text transform=\"translate(16," << margin_t + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
      << escape_xml(y_label) << "</text>\n";
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        const char* color = palette[k % std::size(palette)];
        o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
        for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i)
            if (std::isfinite(s.y[i])) o << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
        o << "\"/>\n";
        const double ly = margin_t + 16 + 18.0 * static_cast<double>(k);
        o << "<line x1=\"" << chart_w - margin_r + 10 << "\" y1=\"" << ly - 4 << "\" x2=\"" << chart_w - margin_r + 30
          << "\" y2=\"" << ly - 4 << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n"
          << "<text x=\"" << chart_w - margin_r + 36 << "\" y=\"" << ly << "\">" << escape_xml(s.name) << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

std::string render_heatmap_svg(const std::string& title, const std::vector<std::string>& row_labels,
                               const std::vector<std::string>& col_labels,
                               const std::vector<std::vector<double>>& values) {
    double lo = INFINITY, hi = -INFINITY;
    for (const auto& row : values)
        for (double v : row)
            if (std::isfinite(v)) lo = std::min(lo, v), hi = std::max(hi, v);
    if (!(lo < hi)) hi = lo + 1;
    const double cell = 56, left = 80, top = 60;
    const double width = left + cell * static_cast<double>(col_labels.size()) + 20;
    const double height = top + cell * static_cast<double>(row_labels.size()) + 20;

    std::ostringstream o;
    o.imbue(std::locale::classic());
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape_xml(title)
      << "</text>\n";
    for (std::size_t j = 0; j < col_labels.size(); ++j)
        o << "<text x=\"" << left + cell * (static_cast<double>(j) + 0.5) << "\" y=\"" << top - 8
          << "\" text-anchor=\"middle\">" << escape_xml(col_labels[j]) << "</text>\n";
    for (std::size_t i = 0; i < row_labels.size(); ++i) {
        const double y = top + cell * static_cast<double>(i);
        o << "<text x=\"" << left - 8 << "\" y=\"" << y + cell / 2 + 4 << "\" text-anchor=\"end\">"
          << escape_xml(row_labels[i]) << "</text>\n";
        for (std::size_t j = 0; j < col_labels.size() && i < values.size() && j < values[i].size(); ++j) {
            const double v = values[i][j];
            const double t = std::isfinite(v) ? (v - lo) / (hi - lo) : 0.0;
            const int shade = static_cast<int>(std::lround(235 - 190 * t));
            const double x = left + cell * static_cast<double>(j);
            o << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell << "\" height=\"" << cell
              << "\" fill=\"rgb(" << shade << ',' << shade << ",255)\" stroke=\"white\"/>\n"
              << "<text x=\"" << x + cell / 2 << "\" y=\"" << y + cell / 2 + 4 << "\" text-anchor=\"middle\">"
              << tick_label(v) << "</text>\n";
        }
    }
    o << "</svg>\n";
    return o.str();
}

} // namespace fnb::harness
