#include "fnbound/infotheory.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "fnbound/errors.hpp"
#include "fnbound/rng.hpp"

namespace fnb::info {

namespace {

constexpr double kSumTolerance = 1e-12;

void check_probability_vector(std::span<const double> p, const char* what) {
    if (p.empty()) throw DomainError(std::string(what) + " is empty");
    double sum = 0.0;
    for (const double v : p) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError(std::string(what) + " has a negative or non-finite entry");
        sum += v;
    }
    if (std::abs(sum - 1.0) > kSumTolerance) throw DomainError(std::string(what) + " does not sum to 1");
}

double xlogx(double v) { return v > 0.0 ? v * std::log(v) : 0.0; }

// p * ln(p * num / den) restricted to p > 0.
double plogratio(double p, double num, double den) {
    return p > 0.0 ? p * std::log(p * num / den) : 0.0;
}

void check_bound_args(double m, double delta) {
    if (!(m >= 1.0) || !std::isfinite(m)) throw DomainError("sample count m must be >= 1");
    if (!(delta > 0.0 && delta < 1.0)) throw DomainError("delta must lie in (0,1)");
}

double confidence_term(double m, double delta) {
    return std::log(2.0 * std::sqrt(m) / delta);
}

// Information terms may come out of floating-point arithmetic a hair below 0.
double nonnegative_term(double v, const char* what) {
    if (!std::isfinite(v) || v < -1e-12) throw DomainError(std::string(what) + " must be finite and >= 0");
    return std::max(v, 0.0);
}

} // namespace

DiscreteDistribution::DiscreteDistribution(std::vector<double> probs) : probs_(std::move(probs)) {
    check_probability_vector(probs_, "distribution");
}

DiscreteDistribution DiscreteDistribution::uniform(std::size_t n) {
    if (n == 0) throw DomainError("uniform distribution over zero outcomes");
    return DiscreteDistribution(std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

DiscreteDistribution DiscreteDistribution::point_mass(std::size_t n, std::size_t at) {
    if (at >= n) throw DomainError("point mass outside the support");
    std::vector<double> p(n, 0.0);
    p[at] = 1.0;
    return DiscreteDistribution(std::move(p));
}

double entropy(const DiscreteDistribution& dist) {
    double h = 0.0;
    for (const double v : dist.probs()) h -= xlogx(v);
    return std::max(h, 0.0);
}

DiscreteDistribution symmetric_noisy_label_marginal(const DiscreteDistribution& prior, double rate, int classes) {
    if (!(rate >= 0.0 && rate <= 1.0)) throw DomainError("rate must lie in [0,1]");
    if (classes < 1 || static_cast<std::size_t>(classes) != prior.size())
        throw DomainError("class count does not match the prior");
    const double floor = rate / static_cast<double>(classes);
    std::vector<double> out(prior.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = (1.0 - rate) * prior[i] + floor;
    // Renormalize away accumulated rounding so the result validates.
    const double sum = std::accumulate(out.begin(), out.end(), 0.0);
    for (auto& v : out) v /= sum;
    return DiscreteDistribution(std::move(out));
}

double symmetric_noise_conditional_entropy(int classes, double rate) {
    return entropy(symmetric_noisy_label_marginal(DiscreteDistribution::point_mass(static_cast<std::size_t>(classes), 0),
                                                  rate, classes));
}

std::vector<double> corruption_chain_entropies(const DiscreteDistribution& prior, std::span<const double> rates,
                                               int classes) {
    std::vector<double> out;
    out.reserve(rates.size());
    for (std::size_t i = 0; i < rates.size(); ++i) {
        if (i > 0 && rates[i] < rates[i - 1]) throw DomainError("rate grid must be nondecreasing");
        out.push_back(entropy(symmetric_noisy_label_marginal(prior, rates[i], classes)));
    }
    return out;
}

double kl_discrete(const DiscreteDistribution& q, const DiscreteDistribution& p) {
    if (q.size() != p.size()) throw DomainError("distributions have different support sizes");
    double kl = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        if (q[i] == 0.0) continue;
        if (p[i] == 0.0) throw DomainError("support of q is not contained in support of p");
        kl += q[i] * std::log(q[i] / p[i]);
    }
    return std::max(kl, 0.0);
}

double kl_gaussian_diag(const GaussianSummary& q, const GaussianSummary& p) {
    const auto k = q.mean.size();
    if (q.variance.size() != k || p.mean.size() != k || p.variance.size() != k)
        throw DomainError("Gaussian summaries have mismatched dimensions");
    if (!(q.variance.array() > 0.0).all() || !(p.variance.array() > 0.0).all())
        throw DomainError("Gaussian variances must be positive");
    double kl = 0.0;
    for (Eigen::Index i = 0; i < k; ++i) {
        const double ratio = q.variance(i) / p.variance(i);
        const double diff = q.mean(i) - p.mean(i);
        kl += -std::log(ratio) + ratio + diff * diff / p.variance(i) - 1.0;
    }
    return std::max(0.5 * kl, 0.0);
}

double gaussian_channel_capacity(double mean_x, double sigma2) {
    if (!(mean_x >= 0.0)) throw DomainError("E(X) must be >= 0");
    if (!(sigma2 > 0.0)) throw DomainError("sigma^2 must be > 0 (zero noise has infinite capacity)");
    return 0.5 * std::log1p(mean_x / sigma2);
}

double gaussian_channel_capacity_power(double second_moment_x, double sigma2) {
    if (!(second_moment_x >= 0.0)) throw DomainError("E(X^2) must be >= 0");
    if (!(sigma2 > 0.0)) throw DomainError("sigma^2 must be > 0 (zero noise has infinite capacity)");
    return 0.5 * std::log1p(second_moment_x / sigma2);
}

double pac_bayes_bound(double kl, double m, double delta) {
    check_bound_args(m, delta);
    kl = nonnegative_term(kl, "KL");
    return std::sqrt((kl + confidence_term(m, delta)) / (2.0 * m));
}

double bound_constraint(double h_y_given_x, double i_wx_term, double m, double delta) {
    check_bound_args(m, delta);
    h_y_given_x = nonnegative_term(h_y_given_x, "conditional label entropy");
    i_wx_term = nonnegative_term(i_wx_term, "I(W;X) term");
    return std::sqrt((h_y_given_x + i_wx_term + confidence_term(m, delta)) / (2.0 * m));
}

SmallJoint::SmallJoint(std::array<std::size_t, 3> dims, std::vector<double> joint,
                       std::optional<std::vector<double>> conditional)
    : dims_(dims), joint_(std::move(joint)), conditional_(std::move(conditional)) {
    for (const auto d : dims_)
        if (d == 0 || d > max_states) throw DomainError("joint alphabets must have 1..8 states");
    const std::size_t cells = dims_[0] * dims_[1] * dims_[2];
    if (joint_.size() != cells) throw DomainError("joint tensor has the wrong number of cells");
    check_probability_vector(joint_, "joint");
    if (conditional_) {
        if (conditional_->size() != cells) throw DomainError("conditional tensor has the wrong number of cells");
        for (std::size_t a = 0; a < dims_[0]; ++a)
            for (std::size_t b = 0; b < dims_[1]; ++b) {
                double row = 0.0;
                for (std::size_t c = 0; c < dims_[2]; ++c) {
                    const double v = (*conditional_)[index(a, b, c)];
                    if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("conditional has a negative entry");
                    row += v;
                }
                if (std::abs(row - 1.0) > kSumTolerance) throw DomainError("conditional rows must sum to 1");
            }
    }
}

CeDecomposition ce_decomposition(const SmallJoint& joint) {
    if (!joint.has_conditional()) throw DomainError("cross-entropy decomposition needs q(y|x,w)");
    const auto [nw, nx, ny] = joint.dims();
    std::vector<double> pw(nw, 0.0), px(nx, 0.0), py(ny, 0.0);
    std::vector<double> pwx(nw * nx, 0.0), pwy(nw * ny, 0.0), pxy(nx * ny, 0.0);
    for (std::size_t w = 0; w < nw; ++w)
        for (std::size_t x = 0; x < nx; ++x)
            for (std::size_t y = 0; y < ny; ++y) {
                const double v = joint.p(w, x, y);
                pw[w] += v;
                px[x] += v;
                py[y] += v;
                pwx[w * nx + x] += v;
                pwy[w * ny + y] += v;
                pxy[x * ny + y] += v;
            }

    CeDecomposition d;
    for (const double v : py) d.h_y -= xlogx(v);
    for (std::size_t w = 0; w < nw; ++w)
        for (std::size_t x = 0; x < nx; ++x)
            d.i_wx += plogratio(pwx[w * nx + x], 1.0, pw[w] * px[x]);
    for (std::size_t w = 0; w < nw; ++w)
        for (std::size_t x = 0; x < nx; ++x)
            for (std::size_t y = 0; y < ny; ++y) {
                const double v = joint.p(w, x, y);
                if (v == 0.0) continue;
                const double q = joint.q(w, x, y);
                if (q <= 0.0) throw DomainError("q(y|x,w) vanishes where p(w,x,y) > 0");
                const double p_wx = pwx[w * nx + x];
                const double p_wy = pwy[w * ny + y];
                const double p_xy = pxy[x * ny + y];
                d.lhs -= v * std::log(q);
                d.i_yx_given_w += plogratio(v, pw[w], p_wx * p_wy);
                d.i_yw_given_x += plogratio(v, px[x], p_wx * p_xy);
                d.i_wx_given_y += plogratio(v, py[y], p_wy * p_xy);
                d.expected_kl += v * std::log((v / p_wx) / q);
            }
    d.rhs = d.h_y - d.i_yx_given_w - d.i_yw_given_x - d.i_wx + d.i_wx_given_y + d.expected_kl;
    return d;
}

double ce_decomposition_residual(const SmallJoint& joint) {
    const auto d = ce_decomposition(joint);
    return std::abs(d.lhs - d.rhs);
}

DpiValues dpi_residuals(const SmallJoint& joint, ChainOrder order) {
    const std::array<std::size_t, 3> roles{order.x, order.y, order.z};
    {
        auto sorted = roles;
        std::sort(sorted.begin(), sorted.end());
        if (sorted != std::array<std::size_t, 3>{0, 1, 2}) throw DomainError("chain order must permute the three axes");
    }
    const auto& dims = joint.dims();
    const std::size_t nx = dims[order.x], ny = dims[order.y], nz = dims[order.z];
    std::vector<double> pxyz(nx * ny * nz, 0.0);
    std::array<std::size_t, 3> idx{};
    for (idx[0] = 0; idx[0] < dims[0]; ++idx[0])
        for (idx[1] = 0; idx[1] < dims[1]; ++idx[1])
            for (idx[2] = 0; idx[2] < dims[2]; ++idx[2])
                pxyz[(idx[order.x] * ny + idx[order.y]) * nz + idx[order.z]] = joint.p(idx[0], idx[1], idx[2]);

    std::vector<double> px(nx, 0.0), py(ny, 0.0), pz(nz, 0.0), pxy(nx * ny, 0.0), pyz(ny * nz, 0.0), pxz(nx * nz, 0.0);
    for (std::size_t x = 0; x < nx; ++x)
        for (std::size_t y = 0; y < ny; ++y)
            for (std::size_t z = 0; z < nz; ++z) {
                const double v = pxyz[(x * ny + y) * nz + z];
                px[x] += v;
                py[y] += v;
                pz[z] += v;
                pxy[x * ny + y] += v;
                pyz[y * nz + z] += v;
                pxz[x * nz + z] += v;
            }
    for (std::size_t x = 0; x < nx; ++x)
        for (std::size_t y = 0; y < ny; ++y)
            for (std::size_t z = 0; z < nz; ++z)
                if (std::abs(pxyz[(x * ny + y) * nz + z] * py[y] - pxy[x * ny + y] * pyz[y * nz + z]) > 1e-12)
                    throw DomainError("not a Markov chain: X and Z are dependent given Y");

    DpiValues out;
    for (std::size_t x = 0; x < nx; ++x) {
        for (std::size_t y = 0; y < ny; ++y) out.i_xy += plogratio(pxy[x * ny + y], 1.0, px[x] * py[y]);
        for (std::size_t z = 0; z < nz; ++z) out.i_xz += plogratio(pxz[x * nz + z], 1.0, px[x] * pz[z]);
    }
    out.i_xy = std::max(out.i_xy, 0.0);
    out.i_xz = std::max(out.i_xz, 0.0);
    return out;
}

double gaussian_differential_entropy(double variance) {
    if (!(variance > 0.0)) throw DomainError("variance must be > 0");
    return 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e * variance);
}

double noise_randomness_gaussian(double var_x, double sigma2) {
    if (!(var_x > 0.0)) throw DomainError("Var(X) must be > 0");
    if (!(sigma2 > 0.0)) throw DomainError("sigma^2 must be > 0");
    return gaussian_differential_entropy(var_x * sigma2 / (var_x + sigma2));
}

double randomness_constraint(double h_y_given_x, double h_x, double randomness, double m, double delta) {
    check_bound_args(m, delta);
    h_y_given_x = nonnegative_term(h_y_given_x, "conditional label entropy");
    if (!std::isfinite(h_x) || !std::isfinite(randomness)) throw DomainError("entropies must be finite");
    const double capacity = std::max(0.0, h_x - randomness);
    return std::sqrt((h_y_given_x + capacity + confidence_term(m, delta)) / (2.0 * m));
}

BinnedMi binned_mi_estimate(std::span<const double> x, std::span<const double> y, std::size_t bins) {
    if (x.size() != y.size()) throw DomainError("samples must have equal lengths");
    if (x.empty()) throw DomainError("no samples");
    if (bins < 2) throw DomainError("need at least two bins");
    const auto [xmin, xmax] = std::minmax_element(x.begin(), x.end());
    const auto [ymin, ymax] = std::minmax_element(y.begin(), y.end());
    if (*xmin == *xmax || *ymin == *ymax) return {0.0, true};

    auto bin_of = [bins](double v, double lo, double hi) {
        const auto b = static_cast<std::size_t>((v - lo) / (hi - lo) * static_cast<double>(bins));
        return std::min(b, bins - 1);
    };
    std::vector<double> joint(bins * bins, 0.0), px(bins, 0.0), py(bins, 0.0);
    const double w = 1.0 / static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const auto bx = bin_of(x[i], *xmin, *xmax);
        const auto by = bin_of(y[i], *ymin, *ymax);
        joint[bx * bins + by] += w;
        px[bx] += w;
        py[by] += w;
    }
    double mi = 0.0;
    for (std::size_t a = 0; a < bins; ++a)
        for (std::size_t b = 0; b < bins; ++b) mi += plogratio(joint[a * bins + b], 1.0, px[a] * py[b]);
    return {std::max(mi, 0.0), false};
}

double conditional_label_entropy_probe(const data::LabeledDataset& dataset, const ProbeConfig& config) {
    dataset.validate();
    if (dataset.size() < 4) throw DataError("probe needs at least four samples");
    std::vector<std::size_t> perm(dataset.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Rng rng(derive_seed(config.seed, stream::probe));
    std::shuffle(perm.begin(), perm.end(), rng);
    const std::size_t half = perm.size() / 2;
    const std::span<const std::size_t> all(perm);
    const auto fit_half = data::select_rows(dataset, all.subspan(0, half));
    const auto held_out = data::select_rows(dataset, all.subspan(half));

    nn::NetworkConfig net_config;
    net_config.layer_sizes.push_back(dataset.feature_count());
    net_config.layer_sizes.insert(net_config.layer_sizes.end(), config.hidden.begin(), config.hidden.end());
    net_config.layer_sizes.push_back(static_cast<std::size_t>(dataset.class_count));
    net_config.seed = derive_seed(config.seed, stream::init);
    auto trained = nn::train(nn::init_network(net_config), fit_half, config.schedule, config.seed);
    return nn::cross_entropy_loss(nn::forward(trained.net, held_out.features), held_out.labels).loss;
}

LinearEntropyModel fit_linear_entropy_model(std::span<const double> sigma2_grid, std::span<const double> estimates) {
    if (sigma2_grid.size() != estimates.size()) throw EstimationError("grid and estimates differ in length");
    if (sigma2_grid.size() < 3) throw EstimationError("linear entropy fit needs at least three grid points");
    LinearEntropyModel model;
    for (std::size_t i = 0; i < sigma2_grid.size(); ++i)
        if (sigma2_grid[i] == 0.0) {
            model.intercept = estimates[i];
            break;
        }
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < sigma2_grid.size(); ++i) {
        sxx += sigma2_grid[i] * sigma2_grid[i];
        sxy += sigma2_grid[i] * (estimates[i] - model.intercept);
    }
    if (!(sxx > 0.0)) throw EstimationError("singular fit: every grid point is zero");
    model.a = sxy / sxx;
    double sse = 0.0;
    for (std::size_t i = 0; i < sigma2_grid.size(); ++i) {
        const double r = estimates[i] - model.intercept - model.a * sigma2_grid[i];
        sse += r * r;
    }
    model.residual = std::sqrt(sse / static_cast<double>(sigma2_grid.size()));
    return model;
}

double optimal_sigma2(double mean_x, double a) {
    if (!(mean_x >= 0.0) || !std::isfinite(mean_x)) throw DomainError("E(X) must be finite and >= 0");
    if (!(a > 0.0)) throw DomainError("slope a must be > 0");
    return 0.5 * (std::sqrt(mean_x * mean_x + 2.0 * mean_x / a) - mean_x);
}

double f_sigma2(double sigma2, double mean_x, double a, double m, double delta) {
    check_bound_args(m, delta);
    if (!(sigma2 > 0.0)) throw DomainError("sigma^2 must be > 0");
    if (!(mean_x >= 0.0)) throw DomainError("E(X) must be >= 0");
    if (!(a >= 0.0)) throw DomainError("slope a must be >= 0");
    const double inner = a * sigma2 + 0.5 * std::log1p(mean_x / sigma2) + confidence_term(m, delta);
    return std::sqrt(inner / (2.0 * m));
}

} // namespace fnb::info
