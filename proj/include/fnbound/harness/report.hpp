#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace fnb::harness {

// One row per (run, epoch). noise_param is sigma^2 for gaussian, the
// corrupted fraction for impulse and the kernel sigma for gaussian_blur.
struct ReportRow {
    std::string run_id;
    std::string label_noise;  // symmetric | pair | instance_dependent
    double delta = 0.0;
    std::string feature_noise;  // none | gaussian | impulse | gaussian_blur
    double noise_param = 0.0;
    std::optional<int> severity;
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double test_acc = 0.0;
    std::uint64_t seed = 0;
};

inline constexpr const char* report_header =
    "run_id,label_noise,delta,feature_noise,noise_param,severity,epoch,train_loss,test_acc,seed";

// Shortest round-trip decimal form, '.' separator, independent of locale.
std::string format_number(double value);

// Quotes a CSV field when it holds a comma, quote or line break.
std::string csv_field(const std::string& text);

void write_report_csv(std::ostream& out, std::span<const ReportRow> rows);

// Generic CSV table: header row, then one line per record.
void write_csv(std::ostream& out, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

void write_text_file(const std::filesystem::path& path, const std::string& content);

// 8-bit binary graymap. Values are min-max normalized to 0..255 and rounded;
// a constant map becomes all zeros.
std::vector<std::uint8_t> encode_pgm(std::span<const double> values, std::size_t height, std::size_t width);

struct Series {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
};

// Minimal line chart with axes, tick labels and a legend.
std::string render_line_chart_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                                  const std::vector<Series>& series);

// Grid of cells shaded by value (row labels down, column labels across).
std::string render_heatmap_svg(const std::string& title, const std::vector<std::string>& row_labels,
                               const std::vector<std::string>& col_labels,
                               const std::vector<std::vector<double>>& values);

} // namespace fnb::harness
