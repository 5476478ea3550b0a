#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "fnbound/core_nn.hpp"
#include "fnbound/datasets.hpp"
#include "fnbound/linalg.hpp"

// Information quantities are in nats throughout.
namespace fnb::info {

// Probability vector; entries >= 0 summing to 1 within 1e-12.
class DiscreteDistribution {
public:
    explicit DiscreteDistribution(std::vector<double> probs);

    static DiscreteDistribution uniform(std::size_t n);
    static DiscreteDistribution point_mass(std::size_t n, std::size_t at);

    std::span<const double> probs() const { return probs_; }
    std::size_t size() const { return probs_.size(); }
    double operator[](std::size_t i) const { return probs_[i]; }

private:
    std::vector<double> probs_;
};

// -sum p ln p with 0 ln 0 := 0.
double entropy(const DiscreteDistribution& dist);

// Label marginal after symmetric noise: (1 - rate) * prior + rate * uniform(c).
DiscreteDistribution symmetric_noisy_label_marginal(const DiscreteDistribution& prior, double rate, int classes);

// H of the symmetric-noise row for a known clean class: (1 - rate + rate/c)
// on the true class and rate/c elsewhere. Equals H(Y~|X) whenever the clean
// label is a deterministic function of the features.
double symmetric_noise_conditional_entropy(int classes, double rate);

// Entropy of the noisy marginal along a nondecreasing grid of rates.
std::vector<double> corruption_chain_entropies(const DiscreteDistribution& prior, std::span<const double> rates,
                                               int classes);

// sum q ln(q/p). DomainError when q puts mass where p has none.
double kl_discrete(const DiscreteDistribution& q, const DiscreteDistribution& p);

// Diagonal Gaussian over a flattened weight vector.
struct GaussianSummary {
    Vector mean;
    Vector variance;

    std::size_t dimension() const { return static_cast<std::size_t>(mean.size()); }
};

// Closed-form KL(Q || P) between diagonal Gaussians.
double kl_gaussian_diag(const GaussianSummary& q, const GaussianSummary& p);

// 1/2 ln(1 + mean_x / sigma2): the additive Gaussian channel capacity with the
// input constraint written on E(X).
double gaussian_channel_capacity(double mean_x, double sigma2);

// 1/2 ln(1 + E(X^2) / sigma2): the classical power-constrained capacity.
// For features in [0,1], E(X^2) <= E(X), so this never exceeds the form above.
double gaussian_channel_capacity_power(double second_moment_x, double sigma2);

// sqrt((kl + ln(2 sqrt(m) / delta)) / (2m)).
double pac_bayes_bound(double kl, double m, double delta);

// sqrt((h_y_given_x + i_wx_term + ln(2 sqrt(m) / delta)) / (2m)). With the
// clean or noisy conditional label entropy this is C_S or C_S~; with the
// channel capacity as i_wx_term it is the feature-noise constraint.
double bound_constraint(double h_y_given_x, double i_wx_term, double m, double delta);

// p(a, b, c) over small finite alphabets (each <= 8 states), stored with the
// last axis fastest, plus an optional conditional q(c | a, b).
class SmallJoint {
public:
    static constexpr std::size_t max_states = 8;

    SmallJoint(std::array<std::size_t, 3> dims, std::vector<double> joint,
               std::optional<std::vector<double>> conditional = std::nullopt);

    const std::array<std::size_t, 3>& dims() const { return dims_; }
    double p(std::size_t a, std::size_t b, std::size_t c) const { return joint_[index(a, b, c)]; }
    double q(std::size_t a, std::size_t b, std::size_t c) const { return (*conditional_)[index(a, b, c)]; }
    bool has_conditional() const { return conditional_.has_value(); }

    std::size_t index(std::size_t a, std::size_t b, std::size_t c) const {
        return (a * dims_[1] + b) * dims_[2] + c;
    }

private:
    std::array<std::size_t, 3> dims_;
    std::vector<double> joint_;
    std::optional<std::vector<double>> conditional_;
};

// Every term of the cross-entropy decomposition, axes read as (W, X, Y).
struct CeDecomposition {
    double lhs = 0.0;          // H_{p,q}(Y | X, W) = -E ln q(Y | X, W)
    double h_y = 0.0;          // H_p(Y)
    double i_yx_given_w = 0.0; // I(Y; X | W)
    double i_yw_given_x = 0.0; // I(Y; W | X)
    double i_wx = 0.0;         // I(W; X)
    double i_wx_given_y = 0.0; // I(W; X | Y)
    double expected_kl = 0.0;  // E_{X,W} D(p(Y|X,W) || q(Y|X,W))
    double rhs = 0.0;
};

// Both sides by exhaustive summation. DomainError without a conditional or
// when q vanishes where p(w,x,y) > 0.
CeDecomposition ce_decomposition(const SmallJoint& joint);
double ce_decomposition_residual(const SmallJoint& joint);

// Axis positions of X, Y, Z in a joint read as the chain X -> Y -> Z.
struct ChainOrder {
    std::size_t x = 0;
    std::size_t y = 1;
    std::size_t z = 2;
};

struct DpiValues {
    double i_xy = 0.0;
    double i_xz = 0.0;
};

// Checks p(x,y,z) p(y) == p(x,y) p(y,z) within 1e-12 (DomainError "not a
// Markov chain" otherwise) and returns I(X;Y), I(X;Z).
DpiValues dpi_residuals(const SmallJoint& joint, ChainOrder order = {});

// h(X) of a Gaussian with the given variance.
double gaussian_differential_entropy(double variance);

// R = h(X | X + Z) for scalar Gaussian X and independent Z ~ N(0, sigma2):
// 1/2 ln(2 pi e var_x sigma2 / (var_x + sigma2)).
double noise_randomness_gaussian(double var_x, double sigma2);

// sqrt((h_y_given_x + max(0, h_x - randomness) + ln(2 sqrt(m)/delta)) / (2m)).
double randomness_constraint(double h_y_given_x, double h_x, double randomness, double m, double delta);

struct BinnedMi {
    double nats = 0.0;
    bool degenerate = false;  // a constant input; the estimate is forced to 0
};

// Plug-in MI on an equal-width bins x bins histogram over each sample range.
BinnedMi binned_mi_estimate(std::span<const double> x, std::span<const double> y, std::size_t bins);

struct ProbeConfig {
    std::vector<std::size_t> hidden;  // empty = softmax regression
    nn::TrainSchedule schedule{.epochs = 20, .batch_size = 64, .lr_initial = 0.05,
                               .lr_drop_epoch = 15, .lr_drop_factor = 0.1, .momentum = 0.9};
    std::uint64_t seed = 0;
};

// Held-out mean cross-entropy of a probe network trained on a seeded half of
// the data and scored on the other half: an upper-bound-flavoured estimate of
// the conditional label entropy given the (possibly noised) features.
double conditional_label_entropy_probe(const data::LabeledDataset& dataset, const ProbeConfig& config);

struct LinearEntropyModel {
    double a = 0.0;          // slope through the origin
    double residual = 0.0;   // RMS misfit of the shifted estimates
    double intercept = 0.0;  // subtracted sigma^2 = 0 estimate (0 when absent)
};

// Least-squares H = a sigma^2 after subtracting the sigma^2 = 0 estimate, if
// the grid contains one. EstimationError on fewer than three points or when
// every grid point is zero.
LinearEntropyModel fit_linear_entropy_model(std::span<const double> sigma2_grid, std::span<const double> estimates);

// 1/2 (sqrt(E(X)^2 + 2 E(X) / a) - E(X)).
double optimal_sigma2(double mean_x, double a);

// sqrt((a sigma2 + ln(sqrt(1 + E(X)/sigma2) * 2 sqrt(m) / delta)) / (2m)).
double f_sigma2(double sigma2, double mean_x, double a, double m, double delta);

} // namespace fnb::info
