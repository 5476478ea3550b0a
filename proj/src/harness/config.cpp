#include "fnbound/harness/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "fnbound/errors.hpp"

namespace fnb::harness {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw ConfigError(path + ": " + what);
}

std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
}

// Walks one JSON object, remembers which keys were read and rejects the rest.
class ObjectReader {
public:
    ObjectReader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
        if (!node_.is_object()) fail(path_.empty() ? "<root>" : path_, "expected an object");
    }

    bool has(const std::string& key) const { return node_.contains(key); }

    const json* find(const std::string& key) {
        seen_.insert(key);
        auto it = node_.find(key);
        return it == node_.end() ? nullptr : &*it;
    }

    std::string path(const std::string& key) const { return join(path_, key); }

    void number(const std::string& key, double& out) {
        if (auto* v = find(key)) {
            if (!v->is_number()) fail(path(key), "expected a number");
            out = v->get<double>();
        }
    }

    template <typename Int>
    void integer(const std::string& key, Int& out) {
        if (auto* v = find(key)) {
            if (!v->is_number_integer()) fail(path(key), "expected an integer");
            if constexpr (std::is_unsigned_v<Int>) {
                if (v->is_number_unsigned() || v->get<long long>() >= 0) {
                    out = v->get<Int>();
                    return;
                }
                fail(path(key), "expected a non-negative integer");
            } else {
                out = v->get<Int>();
            }
        }
    }

    void boolean(const std::string& key, bool& out) {
        if (auto* v = find(key)) {
            if (!v->is_boolean()) fail(path(key), "expected true or false");
            out = v->get<bool>();
        }
    }

    bool string(const std::string& key, std::string& out) {
        if (auto* v = find(key)) {
            if (!v->is_string()) fail(path(key), "expected a string");
            out = v->get<std::string>();
            return true;
        }
        return false;
    }

    void finish() const {
        for (auto it = node_.begin(); it != node_.end(); ++it)
            if (!seen_.count(it.key())) fail(join(path_, it.key()), "unknown key");
    }

private:
    const json& node_;
    std::string path_;
    std::set<std::string> seen_;
};

// Turns a library error raised while interpreting a field into a ConfigError
// carrying that field's path.
template <typename F>
auto at_field(const std::string& path, F&& f) {
    try {
        return f();
    } catch (const ConfigError& e) {
        fail(path, e.what());
    } catch (const DomainError& e) {
        fail(path, e.what());
    }
}

void check(bool ok, const std::string& path, const std::string& what) {
    if (!ok) fail(path, what);
}

void parse_split(const json& node, const std::string& path, data::SplitSpec& split) {
    ObjectReader r(node, path);
    r.number("train", split.train);
    r.number("validation", split.validation);
    r.number("test", split.test);
    r.finish();
    for (auto [name, v] : {std::pair{"train", split.train}, {"validation", split.validation}, {"test", split.test}})
        check(v > 0.0 && v < 1.0, join(path, name), "must lie in (0, 1)");
    check(std::abs(split.train + split.validation + split.test - 1.0) < 1e-9, path, "fractions must sum to 1");
}

void parse_dataset(const json& node, DatasetConfig& d) {
    ObjectReader r(node, "dataset");
    std::string source = "gmm";
    r.string("source", source);
    if (source == "gmm") {
        d.source = DataSource::gmm;
    } else if (source == "idx") {
        d.source = DataSource::idx;
    } else {
        fail("dataset.source", "expected \"gmm\" or \"idx\", got \"" + source + "\"");
    }
    r.integer("classes", d.classes);
    r.integer("dim", d.dim);
    r.number("separation", d.separation);
    r.number("variance", d.variance);
    r.integer("samples_per_class", d.samples_per_class);
    std::string images, labels;
    if (r.string("images", images)) d.images = images;
    if (r.string("labels", labels)) d.labels = labels;
    r.integer("subset", d.subset);
    r.boolean("normalize", d.normalize);
    if (auto* s = r.find("split")) parse_split(*s, "dataset.split", d.split);
    r.finish();

    if (d.source == DataSource::gmm) {
        check(d.classes >= 2, "dataset.classes", "must be at least 2");
        check(d.dim >= 1, "dataset.dim", "must be at least 1");
        check(d.separation > 0.0, "dataset.separation", "must be positive");
        check(d.variance > 0.0, "dataset.variance", "must be positive");
        check(d.samples_per_class >= 1, "dataset.samples_per_class", "must be at least 1");
        for (const char* key : {"images", "labels", "subset"})
            check(!r.has(key), join("dataset", key), "only valid with source \"idx\"");
    } else {
        check(!d.images.empty(), "dataset.images", "required with source \"idx\"");
        check(!d.labels.empty(), "dataset.labels", "required with source \"idx\"");
        for (const char* key : {"classes", "dim", "separation", "variance", "samples_per_class"})
            check(!r.has(key), join("dataset", key), "only valid with source \"gmm\"");
    }
}

void parse_network(const json& node, ExperimentConfig& c) {
    ObjectReader r(node, "network");
    if (auto* h = r.find("hidden")) {
        check(h->is_array(), "network.hidden", "expected an array of layer widths");
        c.hidden.clear();
        for (std::size_t i = 0; i < h->size(); ++i) {
            const auto& v = (*h)[i];
            const std::string p = "network.hidden[" + std::to_string(i) + "]";
            check(v.is_number_integer() && v.get<long long>() > 0, p, "expected a positive integer");
            c.hidden.push_back(v.get<std::size_t>());
        }
    }
    std::string s;
    if (r.string("activation", s)) c.activation = at_field("network.activation", [&] { return nn::parse_activation(s); });
    if (r.string("init", s)) c.init_scheme = at_field("network.init", [&] { return nn::parse_init_scheme(s); });
    r.finish();
}

void parse_train(const json& node, nn::TrainSchedule& t) {
    ObjectReader r(node, "train");
    r.integer("epochs", t.epochs);
    r.integer("batch_size", t.batch_size);
    r.number("lr", t.lr_initial);
    r.integer("lr_drop_epoch", t.lr_drop_epoch);
    r.number("lr_drop_factor", t.lr_drop_factor);
    r.number("momentum", t.momentum);
    r.finish();
    check(t.epochs > 0, "train.epochs", "must be positive");
    check(t.batch_size > 0, "train.batch_size", "must be positive");
    check(t.lr_initial >= 0.0 && std::isfinite(t.lr_initial), "train.lr", "must be finite and >= 0");
    check(t.lr_drop_factor > 0.0 && t.lr_drop_factor <= 1.0, "train.lr_drop_factor", "must be in (0, 1]");
    check(t.momentum >= 0.0 && t.momentum < 1.0, "train.momentum", "must be in [0, 1)");
}

void parse_label_noise(const json& node, noise::LabelNoiseSpec& spec) {
    ObjectReader r(node, "label_noise");
    std::string kind;
    if (r.string("kind", kind))
        spec.kind = at_field("label_noise.kind", [&] { return noise::parse_label_noise_kind(kind); });
    r.number("rate", spec.rate);
    r.finish();
    at_field("label_noise.rate", [&] { spec.validate(); });
}

std::optional<noise::FeatureNoiseSpec> parse_feature_noise(const json& node) {
    ObjectReader r(node, "feature_noise");
    std::string kind_name;
    if (!r.string("kind", kind_name)) fail("feature_noise.kind", "required");
    if (kind_name == "none") {
        r.finish();
        return std::nullopt;
    }
    noise::FeatureNoiseSpec spec;
    spec.kind = at_field("feature_noise.kind", [&] { return noise::parse_feature_noise_kind(kind_name); });

    // The strength key depends on the kind; sigma is accepted as a
    // convenience for gaussian and converted to a variance.
    const char* param_key = spec.kind == noise::FeatureNoiseKind::gaussian ? "sigma2"
                            : spec.kind == noise::FeatureNoiseKind::impulse ? "fraction"
                                                                            : "kernel_sigma";
    double value = 0.0;
    bool have_param = false;
    if (r.has(param_key)) {
        r.number(param_key, value);
        spec.param = value;
        have_param = true;
    }
    if (spec.kind == noise::FeatureNoiseKind::gaussian && r.has("sigma")) {
        check(!have_param, "feature_noise.sigma", "give either sigma or sigma2, not both");
        r.number("sigma", value);
        check(value >= 0.0, "feature_noise.sigma", "must be non-negative");
        spec.param = value * value;
        have_param = true;
    }
    if (r.has("severity")) {
        int level = 0;
        r.integer("severity", level);
        spec.severity = level;
    }
    r.finish();
    check(have_param != spec.severity.has_value(), "feature_noise",
          std::string("give exactly one of \"") + param_key + "\" and \"severity\"");
    at_field(have_param ? join("feature_noise", param_key) : "feature_noise.severity", [&] {
        spec.validate();
        (void)spec.resolved_param();
    });
    return spec;
}

void parse_sweep(const json& node, SweepConfig& s) {
    ObjectReader r(node, "sweep");
    if (auto* axes = r.find("axes")) {
        check(axes->is_array(), "sweep.axes", "expected an array");
        s.axes.clear();
        for (std::size_t i = 0; i < axes->size(); ++i) {
            const std::string p = "sweep.axes[" + std::to_string(i) + "]";
            ObjectReader a((*axes)[i], p);
            SweepAxis axis;
            if (!a.string("name", axis.name)) fail(p + ".name", "required");
            const json* values = a.find("values");
            check(values && values->is_array() && !values->empty(), p + ".values", "expected a non-empty array");
            for (std::size_t j = 0; j < values->size(); ++j) {
                const auto& v = (*values)[j];
                if (v.is_number()) {
                    axis.values.emplace_back(v.get<double>());
                } else if (v.is_string()) {
                    axis.values.emplace_back(v.get<std::string>());
                } else {
                    fail(p + ".values[" + std::to_string(j) + "]", "expected a number or a string");
                }
            }
            a.finish();
            s.axes.push_back(std::move(axis));
        }
    }
    r.integer("repeats", s.repeats);
    r.integer("budget", s.budget);
    r.number("fn_sigma2", s.fn_sigma2);
    r.finish();
    check(s.repeats >= 1, "sweep.repeats", "must be at least 1");
    check(s.fn_sigma2 >= 0.0, "sweep.fn_sigma2", "must be non-negative");
}

void parse_bound(const json& node, BoundVizConfig& b) {
    ObjectReader r(node, "bound");
    r.integer("runs", b.runs);
    r.number("confidence", b.confidence);
    std::string mode;
    if (r.string("prior", mode)) b.prior_mode = at_field("bound.prior", [&] { return bound::parse_prior_mode(mode); });
    r.number("prior_variance", b.prior_variance);
    r.number("variance_floor", b.variance_floor);
    r.finish();
    check(b.runs >= 2, "bound.runs", "must be at least 2");
    check(b.confidence > 0.0 && b.confidence < 1.0, "bound.confidence", "must lie in (0, 1)");
    check(b.prior_variance > 0.0, "bound.prior_variance", "must be positive");
    check(b.variance_floor > 0.0, "bound.variance_floor", "must be positive");
}

} // namespace

ExperimentConfig parse_config(const json& doc) {
    ExperimentConfig c;
    ObjectReader r(doc, "");
    if (auto* v = r.find("dataset")) parse_dataset(*v, c.dataset);
    if (auto* v = r.find("network")) parse_network(*v, c);
    if (auto* v = r.find("train")) parse_train(*v, c.train);
    if (auto* v = r.find("label_noise")) parse_label_noise(*v, c.label_noise);
    if (auto* v = r.find("feature_noise")) c.feature_noise = parse_feature_noise(*v);
    if (auto* v = r.find("evaluation")) {
        ObjectReader e(*v, "evaluation");
        e.string("split", c.eval_split);
        e.finish();
        check(c.eval_split == "test" || c.eval_split == "validation", "evaluation.split",
              "expected \"test\" or \"validation\"");
    }
    r.integer("seed", c.seed);
    std::string out;
    if (r.string("output_dir", out)) c.output_dir = out;
    r.integer("jobs", c.jobs);
    check(c.jobs >= 1, "jobs", "must be at least 1");
    r.boolean("svg", c.svg);
    if (auto* v = r.find("sweep")) parse_sweep(*v, c.sweep);
    if (auto* v = r.find("bound")) parse_bound(*v, c.bound);
    if (auto* v = r.find("saliency")) {
        ObjectReader s(*v, "saliency");
        if (auto* samples = s.find("samples")) {
            check(samples->is_array() && !samples->empty(), "saliency.samples", "expected a non-empty array");
            c.saliency_samples.clear();
            for (std::size_t i = 0; i < samples->size(); ++i) {
                const auto& x = (*samples)[i];
                check(x.is_number_integer() && x.get<long long>() >= 0,
                      "saliency.samples[" + std::to_string(i) + "]", "expected a non-negative integer");
                c.saliency_samples.push_back(x.get<std::size_t>());
            }
        }
        s.finish();
    }
    r.finish();
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(path.string() + ": cannot open config file");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": invalid JSON: " + e.what());
    }
    return parse_config(doc);
}

json to_json(const ExperimentConfig& c) {
    json doc;
    auto& d = doc["dataset"];
    if (c.dataset.source == DataSource::gmm) {
        d = {{"source", "gmm"},
             {"classes", c.dataset.classes},
             {"dim", c.dataset.dim},
             {"separation", c.dataset.separation},
             {"variance", c.dataset.variance},
             {"samples_per_class", c.dataset.samples_per_class}};
    } else {
        d = {{"source", "idx"},
             {"images", c.dataset.images.string()},
             {"labels", c.dataset.labels.string()},
             {"subset", c.dataset.subset}};
    }
    d["normalize"] = c.dataset.normalize;
    d["split"] = {{"train", c.dataset.split.train},
                  {"validation", c.dataset.split.validation},
                  {"test", c.dataset.split.test}};
    doc["network"] = {{"hidden", c.hidden},
                      {"activation", nn::to_string(c.activation)},
                      {"init", nn::to_string(c.init_scheme)}};
    doc["train"] = {{"epochs", c.train.epochs},
                    {"batch_size", c.train.batch_size},
                    {"lr", c.train.lr_initial},
                    {"lr_drop_epoch", c.train.lr_drop_epoch},
                    {"lr_drop_factor", c.train.lr_drop_factor},
                    {"momentum", c.train.momentum}};
    doc["label_noise"] = {{"kind", noise::to_string(c.label_noise.kind)}, {"rate", c.label_noise.rate}};
    if (!c.feature_noise) {
        doc["feature_noise"] = {{"kind", "none"}};
    } else {
        const auto& f = *c.feature_noise;
        json fn = {{"kind", noise::to_string(f.kind)}};
        if (f.severity) {
            fn["severity"] = *f.severity;
        } else {
            const char* key = f.kind == noise::FeatureNoiseKind::gaussian ? "sigma2"
                              : f.kind == noise::FeatureNoiseKind::impulse ? "fraction"
                                                                          : "kernel_sigma";
            fn[key] = *f.param;
        }
        doc["feature_noise"] = fn;
    }
    doc["evaluation"] = {{"split", c.eval_split}};
    doc["seed"] = c.seed;
    doc["output_dir"] = c.output_dir.string();
    doc["jobs"] = c.jobs;
    doc["svg"] = c.svg;
    json axes = json::array();
    for (const auto& a : c.sweep.axes) {
        json values = json::array();
        for (const auto& v : a.values)
            std::visit([&](const auto& x) { values.push_back(x); }, v);
        axes.push_back({{"name", a.name}, {"values", values}});
    }
    doc["sweep"] = {{"axes", axes},
                    {"repeats", c.sweep.repeats},
                    {"budget", c.sweep.budget},
                    {"fn_sigma2", c.sweep.fn_sigma2}};
    doc["bound"] = {{"runs", c.bound.runs},
                    {"confidence", c.bound.confidence},
                    {"prior", bound::to_string(c.bound.prior_mode)},
                    {"prior_variance", c.bound.prior_variance},
                    {"variance_floor", c.bound.variance_floor}};
    doc["saliency"] = {{"samples", c.saliency_samples}};
    return doc;
}

void apply_override(json& doc, std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos || eq == 0)
        throw ConfigError("--set " + std::string(assignment) + ": expected key=value");
    const std::string key(assignment.substr(0, eq));
    const std::string text(assignment.substr(eq + 1));

    json value = json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;

    json* node = &doc;
    std::size_t start = 0;
    while (true) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty()) throw ConfigError("--set " + key + ": empty path component");
        if (node->is_null()) *node = json::object();
        if (!node->is_object()) throw ConfigError("--set " + key + ": " + part + " is not inside an object");
        node = &(*node)[part];
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    *node = std::move(value);
}

} // namespace fnb::harness
