#include "fnbound/harness/commands.hpp"

#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>

#include "fnbound/errors.hpp"
#include "fnbound/harness/experiment.hpp"
#include "fnbound/harness/report.hpp"
#include "fnbound/infotheory.hpp"

namespace fnb::harness {

namespace {

namespace fs = std::filesystem;

void save_config(const ExperimentConfig& config) {
    write_text_file(config.output_dir / "config.json", to_json(config).dump(2) + "\n");
}

void save_rows(const fs::path& path, const std::vector<ReportRow>& rows) {
    std::ostringstream s;
    write_report_csv(s, rows);
    write_text_file(path, s.str());
}

void save_table(const fs::path& path, const std::vector<std::string>& header,
                const std::vector<std::vector<std::string>>& rows) {
    std::ostringstream s;
    write_csv(s, header, rows);
    write_text_file(path, s.str());
}

std::string fixed(double v, int digits = 4) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, digits);
    return ec == std::errc{} ? std::string(buf, end) : format_number(v);
}

std::string general(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 10);
    return ec == std::errc{} ? std::string(buf, end) : format_number(v);
}

} // namespace

void cmd_run(const ExperimentConfig& config, std::ostream& log) {
    const auto data = prepare_data(config);
    const auto result = run_single(config, data, 0, "run-0");
    save_config(config);
    const auto path = config.output_dir / "run.csv";
    save_rows(path, result.rows);
    if (config.svg) {
        Series s{"test accuracy", {}, {}};
        for (const auto& r : result.rows) {
            s.x.push_back(static_cast<double>(r.epoch));
            s.y.push_back(r.test_acc);
        }
        write_text_file(config.output_dir / "run.svg", render_line_chart_svg("Clean-test accuracy", "epoch", "accuracy", {s}));
    }
    log << "run: final " << config.eval_split << " accuracy " << fixed(result.final_accuracy) << ", train loss "
        << fixed(result.final_loss) << " after " << result.rows.size() << " epochs (seed " << result.seed << ") -> "
        << path.string() << "\n";
}

void cmd_sweep_sigma_delta(const ExperimentConfig& config, std::ostream& log) {
    const auto data = prepare_data(config);
    const auto sweep = sweep_sigma_delta(config, data);
    save_config(config);
    save_rows(config.output_dir / "sigma_delta_runs.csv", sweep.rows);

    std::vector<std::vector<std::string>> grid;
    std::vector<std::vector<double>> means;
    for (std::size_t i = 0; i < sweep.deltas.size(); ++i) {
        means.emplace_back();
        for (std::size_t j = 0; j < sweep.sigmas.size(); ++j) {
            const auto& c = sweep.cells[i][j];
            grid.push_back({format_number(sweep.deltas[i]), format_number(sweep.sigmas[j]),
                            format_number(sweep.sigmas[j] * sweep.sigmas[j]), std::to_string(c.accuracies.size()),
                            format_number(c.mean), format_number(c.stddev),
                            sweep.argmax[i] == j ? "1" : "0"});
            means.back().push_back(c.mean);
        }
    }
    save_table(config.output_dir / "sigma_delta.csv",
               {"delta", "sigma", "sigma2", "repeats", "acc_mean", "acc_std", "is_argmax"}, grid);
    if (config.svg) {
        std::vector<std::string> rows, cols;
        for (double d : sweep.deltas) rows.push_back("delta " + format_number(d));
        for (double s : sweep.sigmas) cols.push_back(format_number(s));
        write_text_file(config.output_dir / "sigma_delta.svg",
                        render_heatmap_svg("Mean clean-test accuracy by sigma (columns)", rows, cols, means));
    }
    for (std::size_t i = 0; i < sweep.deltas.size(); ++i) {
        const auto& best = sweep.cells[i][sweep.argmax[i]];
        log << "delta " << format_number(sweep.deltas[i]) << ": best sigma " << format_number(sweep.sigmas[sweep.argmax[i]])
            << " (accuracy " << fixed(best.mean) << " +- " << fixed(best.stddev) << ")\n";
    }
    log << "wrote " << (config.output_dir / "sigma_delta.csv").string() << "\n";
}

void cmd_sweep_feature_noise(const ExperimentConfig& config, std::ostream& log) {
    const auto data = prepare_data(config);
    const auto sweep = sweep_feature_noise_types(config, data);
    save_config(config);
    save_rows(config.output_dir / "feature_noise_runs.csv", sweep.rows);

    std::vector<std::vector<std::string>> table;
    std::vector<Series> series;
    for (std::size_t i = 0; i < sweep.kinds.size(); ++i) {
        Series s{std::string(noise::to_string(sweep.kinds[i])), {}, {}};
        for (std::size_t j = 0; j < sweep.severities.size(); ++j) {
            const int level = sweep.severities[j];
            const auto& c = sweep.cells[i][j];
            const double param = level > 0 ? noise::severity_to_param(sweep.kinds[i], level) : 0.0;
            table.push_back({s.name, std::to_string(level), format_number(param), std::to_string(c.accuracies.size()),
                             format_number(c.mean), format_number(c.stddev)});
            s.x.push_back(level);
            s.y.push_back(c.mean);
            log << s.name << " severity " << level << ": accuracy " << fixed(c.mean) << " +- " << fixed(c.stddev)
                << "\n";
        }
        series.push_back(std::move(s));
    }
    save_table(config.output_dir / "feature_noise.csv",
               {"kind", "severity", "noise_param", "repeats", "acc_mean", "acc_std"}, table);
    if (config.svg)
        write_text_file(config.output_dir / "feature_noise.svg",
                        render_line_chart_svg("Accuracy by feature-noise severity", "severity", "accuracy", series));
    log << "wrote " << (config.output_dir / "feature_noise.csv").string() << "\n";
}

void cmd_sweep_label_noise(const ExperimentConfig& config, std::ostream& log) {
    const auto data = prepare_data(config);
    const auto sweep = sweep_label_noise_types(config, data);
    save_config(config);
    save_rows(config.output_dir / "label_noise_runs.csv", sweep.rows);

    std::vector<std::vector<std::string>> table;
    std::vector<Series> series;
    for (std::size_t i = 0; i < sweep.kinds.size(); ++i) {
        const std::string kind(noise::to_string(sweep.kinds[i]));
        Series off{kind, {}, {}}, on{kind + " + FN", {}, {}};
        for (std::size_t j = 0; j < sweep.deltas.size(); ++j) {
            for (int fn = 0; fn < 2; ++fn) {
                const auto& c = (fn ? sweep.with_fn : sweep.without_fn)[i][j];
                table.push_back({kind, format_number(sweep.deltas[j]), fn ? "1" : "0",
                                 format_number(fn ? sweep.fn_sigma2 : 0.0), std::to_string(c.accuracies.size()),
                                 format_number(c.mean), format_number(c.stddev)});
                (fn ? on : off).x.push_back(sweep.deltas[j]);
                (fn ? on : off).y.push_back(c.mean);
            }
            log << kind << " delta " << format_number(sweep.deltas[j]) << ": accuracy "
                << fixed(sweep.without_fn[i][j].mean) << " without FN, " << fixed(sweep.with_fn[i][j].mean)
                << " with FN\n";
        }
        series.push_back(std::move(off));
        series.push_back(std::move(on));
    }
    save_table(config.output_dir / "label_noise.csv",
               {"kind", "delta", "fn", "sigma2", "repeats", "acc_mean", "acc_std"}, table);
    if (config.svg)
        write_text_file(config.output_dir / "label_noise.svg",
                        render_line_chart_svg("Accuracy by label-noise rate", "delta", "accuracy", series));
    log << "wrote " << (config.output_dir / "label_noise.csv").string() << "\n";
}

void cmd_bound_viz(const ExperimentConfig& config, std::ostream& log) {
    const auto data = prepare_data(config);
    const auto reports = bound_viz(config, data);
    save_config(config);

    std::vector<std::vector<std::string>> table;
    std::vector<Series> series;
    for (const auto& r : reports) {
        Series s{std::string(bound::to_string(r.scenario)), {}, {}};
        for (const auto& e : r.epochs) {
            table.push_back({s.name, std::to_string(e.epoch), format_number(e.kl), format_number(e.bound),
                             format_number(r.m), format_number(r.delta), format_number(r.label_rate),
                             format_number(r.feature_param), std::to_string(r.runs)});
            s.x.push_back(static_cast<double>(e.epoch));
            s.y.push_back(e.bound);
        }
        log << s.name << ": bound " << fixed(r.epochs.front().bound) << " at epoch 1, " << fixed(r.epochs.back().bound)
            << " at epoch " << r.epochs.back().epoch << "\n";
        series.push_back(std::move(s));
    }
    const auto path = config.output_dir / "bounds.csv";
    save_table(path, {"scenario", "epoch", "kl", "bound", "m", "confidence", "label_rate", "feature_param", "runs"},
               table);
    if (config.svg)
        write_text_file(config.output_dir / "bounds.svg",
                        render_line_chart_svg("PAC-Bayes bound per epoch", "epoch", "bound", series));
    log << "wrote " << path.string() << "\n";
}

void cmd_saliency(const ExperimentConfig& config, std::ostream& log) {
    const auto data = prepare_data(config);
    const auto& eval = data.eval(config.eval_split);
    for (std::size_t idx : config.saliency_samples)
        if (idx >= eval.size())
            throw ConfigError("saliency.samples: index " + std::to_string(idx) + " is outside the evaluation split (" +
                              std::to_string(eval.size()) + " samples)");
    const auto run = run_single(config, data, 0, "saliency");
    const auto maps = saliency_maps(run.net, eval, config.saliency_samples);
    save_config(config);
    for (const auto& m : maps) {
        const std::string stem = "saliency_" + std::to_string(m.sample);
        const auto pgm = encode_pgm(m.values, m.height, m.width);
        write_text_file(config.output_dir / (stem + ".pgm"), std::string(pgm.begin(), pgm.end()));
        std::vector<std::vector<std::string>> rows;
        for (std::size_t i = 0; i < m.values.size(); ++i)
            rows.push_back({std::to_string(i / m.width), std::to_string(i % m.width), format_number(m.values[i])});
        save_table(config.output_dir / (stem + ".csv"), {"row", "col", "saliency"}, rows);
        log << "sample " << m.sample << " (label " << m.label << ", predicted " << m.predicted << ") -> "
            << (config.output_dir / (stem + ".pgm")).string() << "\n";
    }
}

namespace {

using Params = std::map<std::string, double>;
using Outputs = std::vector<std::pair<std::string, double>>;

struct Formula {
    std::vector<std::string> params;
    std::string unit;
    std::string description;
    std::function<Outputs(const Params&)> compute;
};

int class_count(double c) {
    if (c != std::floor(c) || c < 2) throw ConfigError("c: expected an integer >= 2");
    return static_cast<int>(c);
}

const std::map<std::string, Formula>& formula_table() {
    static const std::map<std::string, Formula> table = [] {
        std::map<std::string, Formula> t;
        t["capacity"] = {{"meanX", "sigma2"}, "nats", "Gaussian channel capacity 0.5 ln(1 + meanX / sigma2)",
                         [](const Params& p) {
                             return Outputs{{"value", info::gaussian_channel_capacity(p.at("meanX"), p.at("sigma2"))}};
                         }};
        t["capacity_power"] = {{"meanX2", "sigma2"}, "nats", "power form 0.5 ln(1 + E[X^2] / sigma2)",
                               [](const Params& p) {
                                   return Outputs{{"value", info::gaussian_channel_capacity_power(p.at("meanX2"),
                                                                                                  p.at("sigma2"))}};
                               }};
        t["bound"] = {{"kl", "m", "delta"}, "", "PAC-Bayes bound sqrt((kl + ln(2 sqrt(m) / delta)) / (2m))",
                      [](const Params& p) {
                          return Outputs{{"value", info::pac_bayes_bound(p.at("kl"), p.at("m"), p.at("delta"))}};
                      }};
        t["constraint"] = {{"h", "iwx", "m", "delta"}, "", "bound with kl replaced by h + iwx",
                           [](const Params& p) {
                               return Outputs{{"value", info::bound_constraint(p.at("h"), p.at("iwx"), p.at("m"),
                                                                               p.at("delta"))}};
                           }};
        // Conditional entropy of symmetric label noise plus the Gaussian
        // channel capacity, plugged into the bound.
        t["eq22"] = {{"m", "delta", "c", "Delta", "meanX", "sigma2"}, "",
                     "bound with h = H(noisy label | clean label) and iwx = capacity(meanX, sigma2)",
                     [](const Params& p) {
                         const double h = info::symmetric_noise_conditional_entropy(class_count(p.at("c")), p.at("Delta"));
                         const double cap = info::gaussian_channel_capacity(p.at("meanX"), p.at("sigma2"));
                         return Outputs{{"h", h},
                                        {"capacity", cap},
                                        {"value", info::bound_constraint(h, cap, p.at("m"), p.at("delta"))}};
                     }};
        t["optsigma"] = {{"meanX", "a"}, "", "noise variance minimizing a*sigma2 + capacity(meanX, sigma2)",
                         [](const Params& p) {
                             const double s2 = info::optimal_sigma2(p.at("meanX"), p.at("a"));
                             return Outputs{{"sigma2", s2}, {"sigma", std::sqrt(s2)}};
                         }};
        t["fsigma"] = {{"sigma2", "meanX", "a", "m", "delta"}, "", "bound as a function of the noise variance",
                       [](const Params& p) {
                           return Outputs{{"value", info::f_sigma2(p.at("sigma2"), p.at("meanX"), p.at("a"), p.at("m"),
                                                                   p.at("delta"))}};
                       }};
        t["randomness"] = {{"varX", "sigma2"}, "nats", "0.5 ln(2 pi e varX sigma2 / (varX + sigma2))",
                           [](const Params& p) {
                               return Outputs{{"value", info::noise_randomness_gaussian(p.at("varX"), p.at("sigma2"))}};
                           }};
        t["noisy_entropy"] = {{"c", "Delta"}, "nats", "H(noisy label | clean label) under symmetric noise",
                              [](const Params& p) {
                                  return Outputs{{"value", info::symmetric_noise_conditional_entropy(
                                                               class_count(p.at("c")), p.at("Delta"))}};
                              }};
        return t;
    }();
    return table;
}

} // namespace

std::string formulas_help() {
    std::ostringstream s;
    for (const auto& [name, f] : formula_table()) {
        s << "  " << name;
        for (const auto& p : f.params) s << ' ' << p << "=..";
        s << "\n      " << f.description << "\n";
    }
    return s.str();
}

void cmd_formulas(const std::vector<std::string>& query, std::ostream& out) {
    if (query.empty()) throw ConfigError("formulas: expected a formula name; available:\n" + formulas_help());
    const auto& table = formula_table();
    const auto it = table.find(query.front());
    if (it == table.end())
        throw ConfigError("formulas: unknown formula \"" + query.front() + "\"; available:\n" + formulas_help());
    const auto& f = it->second;

    Params params;
    for (std::size_t i = 1; i < query.size(); ++i) {
        const auto& arg = query[i];
        const auto eq = arg.find('=');
        if (eq == std::string::npos) throw ConfigError("formulas: expected key=value, got \"" + arg + "\"");
        const std::string key = arg.substr(0, eq), text = arg.substr(eq + 1);
        if (std::find(f.params.begin(), f.params.end(), key) == f.params.end())
            throw ConfigError("formulas " + it->first + ": unknown parameter \"" + key + "\"");
        double v = 0.0;
        const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
        if (ec != std::errc{} || end != text.data() + text.size() || !std::isfinite(v))
            throw ConfigError("formulas " + it->first + ": " + key + " is not a finite number: \"" + text + "\"");
        if (params.count(key)) throw ConfigError("formulas " + it->first + ": " + key + " given twice");
        params[key] = v;
    }
    for (const auto& p : f.params)
        if (!params.count(p)) throw ConfigError("formulas " + it->first + ": missing parameter " + p);

    Outputs values;
    try {
        values = f.compute(params);
    } catch (const DomainError& e) {
        throw ConfigError("formulas " + it->first + ": " + e.what());
    }
    out << it->first;
    for (const auto& p : f.params) out << ' ' << p << '=' << format_number(params.at(p));
    out << '\n';
    for (const auto& [name, v] : values) {
        out << "  " << name << " = " << general(v);
        if (!f.unit.empty() && name == "value") out << ' ' << f.unit;
        out << '\n';
    }
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const NumericError*>(&e) || dynamic_cast<const TrainingError*>(&e) ||
        dynamic_cast<const EstimationError*>(&e))
        return 3;
    return 2;
}

} // namespace fnb::harness
