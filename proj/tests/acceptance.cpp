// Acceptance suite: one PASS/FAIL line per criterion, tolerances fixed here.
// Exit status is the number of failed criteria (0 when all pass).

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iterator>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"

#include "fnbound/core_nn.hpp"
#include "fnbound/datasets.hpp"
#include "fnbound/errors.hpp"
#include "fnbound/harness/experiment.hpp"
#include "fnbound/harness/report.hpp"
#include "fnbound/infotheory.hpp"
#include "fnbound/noise.hpp"
#include "fnbound/parallel.hpp"

using namespace fnb;
namespace fs = std::filesystem;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v, int digits = 4) {
    std::ostringstream o;
    o.precision(digits);
    o << v;
    return o.str();
}

std::size_t worker_count() { return std::max(1u, std::thread::hardware_concurrency()); }

const std::vector<std::uint64_t> master_seeds{0, 1, 2};

// 5000-sample subset of the bundled digit file, 784-128-64-10 MLP, 0.8
// symmetric label noise.
harness::ExperimentConfig mnist_config(std::uint64_t seed) {
    harness::ExperimentConfig c;
    c.dataset.source = harness::DataSource::idx;
    c.dataset.images = fs::path(FNBOUND_DATA_DIR) / "mnist10k-images-idx3-ubyte";
    c.dataset.labels = fs::path(FNBOUND_DATA_DIR) / "mnist10k-labels-idx1-ubyte";
    c.dataset.subset = 5000;
    c.hidden = {128, 64};
    c.label_noise = {noise::LabelNoiseKind::symmetric, 0.8, 0};
    c.seed = seed;
    c.jobs = worker_count();
    return c;
}

noise::FeatureNoiseSpec gaussian(double sigma2) {
    noise::FeatureNoiseSpec s;
    s.kind = noise::FeatureNoiseKind::gaussian;
    s.param = sigma2;
    return s;
}

std::vector<double> random_simplex(std::size_t n, std::mt19937_64& rng) {
    std::exponential_distribution<double> e(1.0);
    std::vector<double> p(n);
    double s = 0.0;
    for (auto& v : p) s += (v = e(rng));
    for (auto& v : p) v /= s;
    return p;
}

double golden_min(const std::function<double(double)>& f, double lo, double hi) {
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    for (int i = 0; i < 400 && b - a > 1e-13; ++i) {
        const double c = b - g * (b - a), d = a + g * (b - a);
        if (f(c) < f(d)) b = d;
        else a = c;
    }
    return 0.5 * (a + b);
}

// 1. Capacity constant.
Verdict capacity_constant() {
    const double v = info::gaussian_channel_capacity(0.5, 0.5);
    const double expected = 0.5 * std::numbers::ln2;
    return {std::abs(v - expected) <= 1e-6, "capacity(0.5, 0.5) = " + fmt(v, 10) + ", expected " + fmt(expected, 10)};
}

// 2. Constraint value for m = 30000, delta = 0.05, c = 10, rate 0.8.
Verdict constraint_value() {
    const double h = info::symmetric_noise_conditional_entropy(10, 0.8);
    const double cap = info::gaussian_channel_capacity(0.1307, 1.0);
    const double v = info::bound_constraint(h, cap, 30000, 0.05);
    const bool pass = std::abs(h - 2.1745) < 1e-3 && v >= 0.012 && v <= 0.016;
    return {pass, "H = " + fmt(h, 6) + " nats, capacity = " + fmt(cap, 6) + ", value = " + fmt(v, 6) +
                      " (window [0.012, 0.016])"};
}

// 3. Cross-entropy decomposition residual.
Verdict ce_decomposition() {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<std::size_t> states(1, 4);
    double worst = 0.0;
    for (int t = 0; t < 1000; ++t) {
        const std::array<std::size_t, 3> dims{states(rng), states(rng), states(rng)};
        auto p = random_simplex(dims[0] * dims[1] * dims[2], rng);
        std::vector<double> q;
        for (std::size_t i = 0; i < dims[0] * dims[1]; ++i) {
            const auto row = random_simplex(dims[2], rng);
            q.insert(q.end(), row.begin(), row.end());
        }
        worst = std::max(worst, info::ce_decomposition_residual(info::SmallJoint(dims, std::move(p), std::move(q))));
    }
    return {worst < 1e-10, "max residual over 1000 joints = " + fmt(worst, 3)};
}

// 4. Corruption chain entropies.
Verdict corruption_chain() {
    std::mt19937_64 rng(4);
    std::uniform_int_distribution<int> classes(2, 10);
    std::vector<double> grid;
    for (int i = 0; i <= 10; ++i) grid.push_back(i / 10.0);
    int violations = 0;
    double worst_terminal = 0.0;
    for (int t = 0; t < 100; ++t) {
        const int c = classes(rng);
        info::DiscreteDistribution prior{random_simplex(static_cast<std::size_t>(c), rng)};
        const auto h = info::corruption_chain_entropies(prior, grid, c);
        for (std::size_t i = 1; i < h.size(); ++i)
            if (h[i] < h[i - 1]) ++violations;
        worst_terminal = std::max(worst_terminal, std::abs(h.back() - std::log(static_cast<double>(c))));
    }
    return {violations == 0 && worst_terminal <= 1e-12,
            std::to_string(violations) + " decreasing steps, max |H(1) - ln c| = " + fmt(worst_terminal, 3)};
}

// 5. Closed-form optimal variance vs a direct minimization of f.
Verdict optimal_variance() {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> mean(0.0, 1.0), slope(0.1, 10.0);
    double worst = 0.0;
    for (int t = 0; t < 50; ++t) {
        double m = 0.0;
        while (m <= 0.0) m = mean(rng);
        const double a = slope(rng);
        const double star = info::optimal_sigma2(m, a);
        const double found =
            golden_min([&](double s2) { return info::f_sigma2(s2, m, a, 30000, 0.05); }, 1e-12, 20.0);
        worst = std::max(worst, std::abs(star - found));
    }
    return {worst < 1e-4, "max |closed form - golden section| = " + fmt(worst, 3)};
}

// 6. Backward pass vs central differences on random weights and biases.
// Relative error is
// |g - fd| / max(|g|, |fd|, 1e-6); the floor keeps near-zero components on an
// absolute scale.
Verdict gradient_exactness() {
    std::mt19937_64 rng(6);
    std::uniform_int_distribution<std::size_t> width(1, 6), batch(1, 5);
    std::uniform_int_distribution<int> depth(1, 3), classes(2, 5);
    std::normal_distribution<double> normal(0.0, 1.0);
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
        nn::NetworkConfig cfg;
        cfg.layer_sizes.push_back(width(rng));
        for (int l = 0, n = depth(rng); l < n; ++l) cfg.layer_sizes.push_back(width(rng));
        const int c = classes(rng);
        cfg.layer_sizes.push_back(static_cast<std::size_t>(c));
        cfg.activation = t % 2 ? nn::Activation::tanh : nn::Activation::relu;
        cfg.seed = rng();
        // random biases too: with zero biases a dead ReLU layer puts the next
        // pre-activations exactly on the kink, where central differences are
        // not a derivative
        auto net = nn::init_network(cfg);
        for (auto& layer : net.layers())
            for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias(i) = 0.5 * normal(rng);
        const std::size_t n = batch(rng);
        Matrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(cfg.layer_sizes.front()));
        for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = normal(rng);
        std::vector<int> y(n);
        for (auto& v : y) v = static_cast<int>(rng() % static_cast<std::uint64_t>(c));

        const auto g = nn::backward(net, x, y);
        auto loss = [&](const nn::Network& w) { return nn::cross_entropy_loss(nn::forward(w, x), y).loss; };
        const double h = 1e-6;
        auto compare = [&](double analytic, double fd) {
            const double e = std::abs(analytic - fd) / std::max({std::abs(analytic), std::abs(fd), 1e-6});
            worst = std::max(worst, e);
        };
        for (std::size_t l = 0; l < net.layers().size(); ++l) {
            for (Eigen::Index i = 0; i < net.layers()[l].weight.size(); ++i) {
                auto p = net, m = net;
                p.layers()[l].weight.data()[i] += h;
                m.layers()[l].weight.data()[i] -= h;
                compare(g.layers[l].weight.data()[i], (loss(p) - loss(m)) / (2 * h));
            }
            for (Eigen::Index i = 0; i < net.layers()[l].bias.size(); ++i) {
                auto p = net, m = net;
                p.layers()[l].bias(i) += h;
                m.layers()[l].bias(i) -= h;
                compare(g.layers[l].bias(i), (loss(p) - loss(m)) / (2 * h));
            }
        }
    }
    return {worst < 1e-4, "max relative error over 100 networks = " + fmt(worst, 3)};
}

// 7. Feature noise at a validation-selected sigma vs the sigma = 0 baseline.
Verdict fn_effect() {
    const std::vector<double> sigmas{0.2, 0.4, 0.6, 0.8, 1.0};
    int wins = 0;
    std::string detail;
    for (auto seed : master_seeds) {
        auto c = mnist_config(seed);
        const auto data = harness::prepare_data(c);
        std::vector<harness::ExperimentConfig> configs{c};
        for (double s : sigmas) {
            auto fc = c;
            fc.feature_noise = gaussian(s * s);
            configs.push_back(fc);
        }
        std::vector<harness::RunResult> results(configs.size());
        parallel_for(configs.size(), c.jobs,
                     [&](std::size_t i) { results[i] = harness::run_single(configs[i], data, 0, "c7"); });
        std::size_t best = 1;
        double best_val = -1.0;
        for (std::size_t i = 1; i < results.size(); ++i) {
            const double v = nn::evaluate(results[i].net, data.validation);
            if (v > best_val) {
                best_val = v;
                best = i;
            }
        }
        const double gap = results[best].final_accuracy - results[0].final_accuracy;
        if (gap >= 0.05) ++wins;
        detail += "seed " + std::to_string(seed) + ": baseline " + fmt(results[0].final_accuracy) + ", sigma " +
                  fmt(sigmas[best - 1]) + " -> " + fmt(results[best].final_accuracy) + "; ";
    }
    return {wins >= 2, detail + std::to_string(wins) + "/3 seeds with gap >= 0.05"};
}

// 8. Per-delta argmax sigma nondecreasing in delta.
Verdict sigma_delta_property() {
    int wins = 0;
    std::string detail;
    for (auto seed : master_seeds) {
        auto c = mnist_config(seed);
        c.sweep.axes = {{"delta", {0.0, 0.4, 0.8}}, {"sigma", {0.0, 0.2, 0.4, 0.6, 0.8, 1.0}}};
        c.sweep.repeats = 3;
        const auto data = harness::prepare_data(c);
        const auto s = harness::sweep_sigma_delta(c, data);
        bool ok = true;
        detail += "seed " + std::to_string(seed) + ": argmax sigma";
        for (std::size_t i = 0; i < s.deltas.size(); ++i) {
            detail += " " + fmt(s.sigmas[s.argmax[i]]);
            if (i > 0 && s.sigmas[s.argmax[i]] < s.sigmas[s.argmax[i - 1]]) ok = false;
        }
        detail += ok ? " (ok); " : " (decreasing); ";
        if (ok) ++wins;
    }
    return {wins >= 2, detail + std::to_string(wins) + "/3 seeds nondecreasing"};
}

// 9. Bound curves under the three scenarios.
Verdict bound_ordering() {
    auto c = mnist_config(0);
    c.feature_noise = gaussian(1.0);
    c.bound.runs = 20;
    c.bound.confidence = 0.05;
    c.bound.prior_mode = bound::PriorMode::standard_normal;
    const auto data = harness::prepare_data(c);
    const auto reports = harness::bound_viz(c, data);
    const bound::BoundReport* label = nullptr;
    const bound::BoundReport* both = nullptr;
    for (const auto& r : reports) {
        if (r.scenario == bound::Scenario::label_noise) label = &r;
        if (r.scenario == bound::Scenario::label_and_feature_noise) both = &r;
    }
    if (!label || !both) return {false, "missing scenario in the bound report"};
    const double final_label = label->epochs.back().bound;
    const double final_both = both->epochs.back().bound;
    double early_min = label->epochs.front().bound;
    for (std::size_t e = 0; e < std::min<std::size_t>(5, label->epochs.size()); ++e)
        early_min = std::min(early_min, label->epochs[e].bound);
    const bool a = final_both < final_label;
    const bool b = final_label > early_min;
    std::string detail = "final bound label+feature " + fmt(final_both, 6) + " vs label " + fmt(final_label, 6) +
                         (a ? " (ok)" : " (not below)") + "; label final " + fmt(final_label, 6) +
                         " vs epoch<=5 minimum " + fmt(early_min, 6) + (b ? " (ok)" : " (not above)");
    for (const auto& r : reports)
        detail += "; " + std::string(bound::to_string(r.scenario)) + " kl " + fmt(r.epochs.front().kl) + " -> " +
                  fmt(r.epochs.back().kl);
    return {a && b, detail};
}

// 10. Severity 5 vs severity 1 per feature noise type.
Verdict feature_type_property() {
    int wins = 0;
    std::string detail;
    for (auto seed : master_seeds) {
        auto c = mnist_config(seed);
        c.sweep.axes = {{"kind", {std::string("gaussian"), std::string("impulse"), std::string("gaussian_blur")}},
                        {"severity", {1.0, 5.0}}};
        c.sweep.repeats = 3;
        const auto data = harness::prepare_data(c);
        const auto s = harness::sweep_feature_noise_types(c, data);
        const double g1 = s.cells[0][0].mean, g5 = s.cells[0][1].mean;
        const double i1 = s.cells[1][0].mean, i5 = s.cells[1][1].mean;
        const double b1 = s.cells[2][0].mean, b5 = s.cells[2][1].mean;
        const bool ok = g5 >= g1 && i5 >= i1 && b5 <= b1 + 0.02;
        if (ok) ++wins;
        detail += "seed " + std::to_string(seed) + ": gaussian " + fmt(g1) + "->" + fmt(g5) + ", impulse " + fmt(i1) +
                  "->" + fmt(i5) + ", blur " + fmt(b1) + "->" + fmt(b5) + (ok ? " (ok); " : " (violated); ");
    }
    return {wins >= 2, detail + std::to_string(wins) + "/3 seeds satisfy all three"};
}

// 11. Binned MI of an additive Gaussian channel; probe entropy vs sigma^2.
Verdict estimators() {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> normal(0.0, 1.0);
    const std::size_t n = 200000;
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = normal(rng);
        y[i] = x[i] + normal(rng);
    }
    const double mi = info::binned_mi_estimate(x, y, 32).nats;
    const double analytic = 0.5 * std::log(2.0);
    const bool mi_ok = std::abs(mi - analytic) <= 0.05;

    auto c = mnist_config(0);
    c.label_noise.rate = 0.0;
    const auto data = harness::prepare_data(c);
    const std::vector<double> grid{0.0, 0.1, 0.25, 0.5, 1.0};
    std::vector<double> h(grid.size());
    parallel_for(grid.size(), c.jobs, [&](std::size_t i) {
        auto noisy = data.train;
        if (grid[i] > 0.0) {
            auto spec = gaussian(grid[i]);
            spec.seed = 1100 + i;
            noisy = noise::apply_feature_noise(noisy, spec);
        }
        info::ProbeConfig probe;
        probe.seed = 11;
        h[i] = info::conditional_label_entropy_probe(noisy, probe);
    });
    int inversions = 0, large = 0;
    for (std::size_t i = 1; i < h.size(); ++i)
        if (h[i] < h[i - 1]) {
            ++inversions;
            if (h[i - 1] - h[i] > 0.05) ++large;
        }
    const bool probe_ok = inversions <= 1 && large == 0;
    std::string detail = "binned MI " + fmt(mi, 5) + " vs " + fmt(analytic, 5) + "; probe H:";
    for (double v : h) detail += " " + fmt(v);
    detail += " (" + std::to_string(inversions) + " inversions)";
    return {mi_ok && probe_ok, detail};
}

// 12. IDX corpus rejection and golden report/image files.
Verdict formats() {
    const fs::path idx = fs::path(FNBOUND_TEST_DIR) / "fixtures" / "idx";
    const std::vector<std::pair<std::string, std::string>> corpus{
        {"bad_magic", "images.magic"},   {"truncated", "images.data"},  {"dim_overflow", "images.dims"},
        {"count_mismatch", "labels.count"}, {"zero_count", "labels.count"}, {"trailing_garbage", "images.data"}};
    int rejected = 0;
    std::string detail;
    for (const auto& [name, field] : corpus) {
        try {
            data::load_idx(idx / (name + "-images.idx"), idx / (name + "-labels.idx"));
            detail += name + " accepted; ";
        } catch (const FormatError& e) {
            if (e.field() == field) ++rejected;
            else detail += name + " blamed " + e.field() + "; ";
        }
    }
    bool valid_ok = false;
    try {
        valid_ok = data::load_idx(idx / "valid-images.idx", idx / "valid-labels.idx").size() == 2;
    } catch (const Error& e) {
        detail += std::string("valid pair rejected: ") + e.what() + "; ";
    }

    auto read = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    };
    std::vector<harness::ReportRow> rows;
    rows.push_back({"run-0", "symmetric", 0.8, "gaussian", 0.25, std::nullopt, 1, 2.5, 0.125, 42});
    rows.push_back({"a,b", "pair", 0.4, "impulse", 0.09, 3, 2, 0.1, 1.0, 18446744073709551615ull});
    rows.push_back({"run-2", "instance_dependent", 0.0, "none", 0.0, std::nullopt, 30, 0.0001, 0.9375, 0});
    std::ostringstream csv;
    harness::write_report_csv(csv, rows);
    const bool csv_ok = csv.str() == read(fs::path(FNBOUND_TEST_DIR) / "golden" / "report.csv");

    const std::vector<double> values{0, 0.5, 1, 2, -1, 3, 0.25, 1.5, 2.5, 0.75, -0.5, 1};
    const auto pgm = harness::encode_pgm(values, 3, 4);
    const bool pgm_ok =
        std::string(pgm.begin(), pgm.end()) == read(fs::path(FNBOUND_TEST_DIR) / "golden" / "saliency_3x4.pgm");

    detail += std::to_string(rejected) + "/" + std::to_string(corpus.size()) + " corrupted fixtures rejected";
    detail += std::string(", valid pair ") + (valid_ok ? "loaded" : "failed");
    detail += std::string(", CSV golden ") + (csv_ok ? "match" : "MISMATCH");
    detail += std::string(", PGM golden ") + (pgm_ok ? "match" : "MISMATCH");
    return {rejected == static_cast<int>(corpus.size()) && valid_ok && csv_ok && pgm_ok, detail};
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"fnbound acceptance criteria"};
    std::vector<int> only;
    app.add_option("--only", only, "Run only these criteria (1-12)")->check(CLI::Range(1, 12));
    CLI11_PARSE(app, argc, argv);

    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
        {"capacity constant", capacity_constant},
        {"constraint value", constraint_value},
        {"cross-entropy decomposition", ce_decomposition},
        {"corruption chain entropies", corruption_chain},
        {"optimal noise variance", optimal_variance},
        {"gradient exactness", gradient_exactness},
        {"feature noise effect", fn_effect},
        {"sigma-delta argmax ordering", sigma_delta_property},
        {"bound ordering", bound_ordering},
        {"feature noise types", feature_type_property},
        {"information estimators", estimators},
        {"format conformance", formats}};

    const std::set<int> selected(only.begin(), only.end());
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!selected.empty() && !selected.count(id)) continue;
        const auto start = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = criteria[i].second();
        } catch (const std::exception& e) {
            v = {false, std::string("error: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (!v.pass) ++failures;
        std::printf("criterion %2d %-30s %s  [%.1fs] %s\n", id, criteria[i].first.c_str(), v.pass ? "PASS" : "FAIL",
                    secs, v.detail.c_str());
        std::fflush(stdout);
    }
    return failures;
}
