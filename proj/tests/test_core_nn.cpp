#include "doctest.h"

#include <cmath>
#include <numeric>

#include "fnbound/core_nn.hpp"
#include "fnbound/errors.hpp"
#include "test_util.hpp"

using namespace fnb;
using namespace fnb::nn;

namespace {

Network make_net(std::vector<std::size_t> sizes, Activation act, std::uint64_t seed,
                 InitScheme init = InitScheme::he) {
    return init_network({.layer_sizes = std::move(sizes), .activation = act, .init_scheme = init, .seed = seed});
}

double loss_of(const Network& net, const Matrix& x, const std::vector<int>& y) {
    return cross_entropy_loss(forward(net, x), y).loss;
}

// Independent forward pass written as explicit loops.
std::vector<double> naive_logits(const Network& net, const std::vector<double>& x) {
    std::vector<double> a = x;
    const auto& layers = net.layers();
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const auto& L = layers[l];
        std::vector<double> z(static_cast<std::size_t>(L.weight.rows()));
        for (Eigen::Index o = 0; o < L.weight.rows(); ++o) {
            double s = L.bias(o);
            for (Eigen::Index i = 0; i < L.weight.cols(); ++i) s += L.weight(o, i) * a[static_cast<std::size_t>(i)];
            z[static_cast<std::size_t>(o)] = s;
        }
        if (l + 1 < layers.size())
            for (double& v : z) v = net.activation() == Activation::relu ? std::max(0.0, v) : std::tanh(v);
        a = z;
    }
    return a;
}

std::vector<int> random_labels(std::size_t n, int c, std::mt19937_64& rng) {
    std::uniform_int_distribution<int> d(0, c - 1);
    std::vector<int> y(n);
    for (auto& v : y) v = d(rng);
    return y;
}

} // namespace

TEST_SUITE("core_nn") {

TEST_CASE("network config validation and parameter count") {
    CHECK(NetworkConfig{.layer_sizes = {2, 3, 2}}.parameter_count() == 17);
    CHECK_THROWS_AS(init_network({.layer_sizes = {4}}), ConfigError);
    CHECK_THROWS_AS(init_network({.layer_sizes = {4, 0, 2}}), ConfigError);
    CHECK(make_net({2, 3, 2}, Activation::relu, 1).parameter_count() == 17);
    CHECK(parse_activation("tanh") == Activation::tanh);
    CHECK(parse_init_scheme("xavier") == InitScheme::xavier);
    CHECK_THROWS_AS(parse_activation("sigmoid"), ConfigError);
}

TEST_CASE("initialization is deterministic and seed-sensitive") {
    const auto a = flatten_weights(make_net({5, 7, 3}, Activation::relu, 42));
    const auto b = flatten_weights(make_net({5, 7, 3}, Activation::relu, 42));
    const auto c = flatten_weights(make_net({5, 7, 3}, Activation::relu, 43));
    CHECK(a == b);
    CHECK(a != c);
    const auto net = make_net({5, 7, 3}, Activation::relu, 42);
    for (const auto& L : net.layers()) CHECK(L.bias.isZero(0.0));
}

TEST_CASE("he and xavier initial standard deviations") {
    // 100 x 100 weights = 10^4 draws.
    const auto he = make_net({100, 100}, Activation::relu, 7, InitScheme::he);
    const auto& w = he.layers()[0].weight;
    const double mean = w.mean();
    const double sd = std::sqrt((w.array() - mean).square().sum() / static_cast<double>(w.size() - 1));
    CHECK(std::abs(sd - std::sqrt(2.0 / 100.0)) < 0.2 * std::sqrt(2.0 / 100.0));

    const auto xa = make_net({100, 300}, Activation::tanh, 7, InitScheme::xavier);
    const auto& wx = xa.layers()[0].weight;
    const double sdx = std::sqrt((wx.array() - wx.mean()).square().sum() / static_cast<double>(wx.size() - 1));
    CHECK(std::abs(sdx - std::sqrt(2.0 / 400.0)) < 0.05 * std::sqrt(2.0 / 400.0));
}

TEST_CASE("forward matches hand-computed affine map and naive loops") {
    DenseLayer L{Matrix(2, 3), Vector(2)};
    L.weight << 1, 0, 0, 0, 2, -1;
    L.bias << 0.5, -0.5;
    Network lin({L}, Activation::relu);
    Matrix x(1, 3);
    x << 3, 4, 5;
    const Matrix z = forward(lin, x);
    CHECK(z(0, 0) == doctest::Approx(3.5));
    CHECK(z(0, 1) == doctest::Approx(2.5));

    std::mt19937_64 rng(3);
    const auto net = make_net({4, 6, 5, 3}, Activation::tanh, 11);
    const Matrix batch = test::random_matrix(8, 4, rng);
    const Matrix all = forward(net, batch);
    for (Eigen::Index i = 0; i < batch.rows(); ++i) {
        const Matrix one = forward(net, batch.row(i));
        std::vector<double> xi(batch.row(i).data(), batch.row(i).data() + 4);
        const auto ref = naive_logits(net, xi);
        for (Eigen::Index k = 0; k < 3; ++k) {
            CHECK(all(i, k) == one(0, k));
            CHECK(all(i, k) == doctest::Approx(ref[static_cast<std::size_t>(k)]).epsilon(1e-12));
        }
    }
    CHECK_THROWS_AS(forward(net, Matrix::Zero(2, 5)), ShapeError);
}

TEST_CASE("zero network gives uniform softmax") {
    auto net = make_net({3, 4, 10}, Activation::relu, 1);
    for (auto& L : net.layers()) {
        L.weight.setZero();
        L.bias.setZero();
    }
    Matrix x = Matrix::Ones(2, 3);
    const Matrix z = forward(net, x);
    CHECK(z.isZero(0.0));
    const Matrix ls = log_softmax(z);
    for (Eigen::Index j = 0; j < 10; ++j) CHECK(ls(0, j) == doctest::Approx(-std::log(10.0)));
}

TEST_CASE("cross entropy values") {
    const Matrix uniform = Matrix::Constant(3, 10, 0.7);
    CHECK(cross_entropy_loss(uniform, std::vector<int>{0, 4, 9}).loss == doctest::Approx(std::log(10.0)).epsilon(1e-12));

    Matrix confident = Matrix::Zero(1, 3);
    confident(0, 1) = 40.0;
    CHECK(cross_entropy_loss(confident, std::vector<int>{1}).loss < 1e-6);

    Matrix huge(1, 2);
    huge << 1000.0, -1000.0;
    const auto r = cross_entropy_loss(huge, std::vector<int>{1});
    CHECK(std::isfinite(r.loss));
    CHECK(r.loss == doctest::Approx(2000.0));

    CHECK_THROWS_AS(cross_entropy_loss(uniform, std::vector<int>{0, 10, 1}), DataError);
    CHECK_THROWS_AS(cross_entropy_loss(uniform, std::vector<int>{0, -1, 1}), DataError);
}

TEST_CASE("logit gradient matches central differences") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        Matrix z = test::random_matrix(1, 6, rng, 2.0);
        const std::vector<int> y{trial % 6};
        const auto r = cross_entropy_loss(z, y);
        for (Eigen::Index k = 0; k < z.cols(); ++k) {
            const double h = 1e-5;
            Matrix zp = z, zm = z;
            zp(0, k) += h;
            zm(0, k) -= h;
            const double fd = (cross_entropy_loss(zp, y).loss - cross_entropy_loss(zm, y).loss) / (2 * h);
            CHECK(test::rel_err(r.grad_logits(0, k), fd, 1e-8) < 1e-6);
        }
    }
}

TEST_CASE("backward matches central differences on a 2-16-3 net") {
    for (auto act : {Activation::relu, Activation::tanh}) {
        std::mt19937_64 rng(9);
        const auto net = make_net({2, 16, 3}, act, 21);
        const Matrix x = test::random_matrix(5, 2, rng);
        const auto y = random_labels(5, 3, rng);
        const auto g = backward(net, x, y);
        CHECK(g.loss == doctest::Approx(loss_of(net, x, y)).epsilon(1e-14));
        double worst = 0.0;
        for (std::size_t l = 0; l < net.layers().size(); ++l) {
            const auto& L = net.layers()[l];
            for (Eigen::Index i = 0; i < L.weight.size(); ++i) {
                auto p = net, m = net;
                p.layers()[l].weight.data()[i] += 1e-5;
                m.layers()[l].weight.data()[i] -= 1e-5;
                const double fd = (loss_of(p, x, y) - loss_of(m, x, y)) / 2e-5;
                worst = std::max(worst, test::rel_err(g.layers[l].weight.data()[i], fd));
            }
            for (Eigen::Index i = 0; i < L.bias.size(); ++i) {
                auto p = net, m = net;
                p.layers()[l].bias(i) += 1e-5;
                m.layers()[l].bias(i) -= 1e-5;
                const double fd = (loss_of(p, x, y) - loss_of(m, x, y)) / 2e-5;
                worst = std::max(worst, test::rel_err(g.layers[l].bias(i), fd));
            }
        }
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            Matrix p = x, m = x;
            p.data()[i] += 1e-5;
            m.data()[i] -= 1e-5;
            const double fd = (loss_of(net, p, y) - loss_of(net, m, y)) / 2e-5;
            worst = std::max(worst, test::rel_err(g.input.data()[i], fd));
        }
        CHECK(worst < 1e-4);
    }
}

TEST_CASE("input gradient of a linear softmax model") {
    std::mt19937_64 rng(17);
    DenseLayer L{test::random_matrix(4, 3, rng), Vector::Zero(4)};
    Network net({L}, Activation::relu);
    const Matrix x = test::random_matrix(2, 3, rng);
    const std::vector<int> y{1, 3};
    const auto g = backward(net, x, y);
    // (softmax - onehot) / B times W
    Matrix p = log_softmax(x * L.weight.transpose()).array().exp();
    for (int i = 0; i < 2; ++i) p(i, y[static_cast<std::size_t>(i)]) -= 1.0;
    const Matrix expected = p / 2.0 * L.weight;
    CHECK((g.input - expected).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("confident correct batch has vanishing gradients") {
    DenseLayer L{Matrix::Zero(2, 2), Vector::Zero(2)};
    L.weight << 50, 0, 0, 50;
    Network net({L}, Activation::relu);
    Matrix x(2, 2);
    x << 1, 0, 0, 1;
    const auto g = backward(net, x, std::vector<int>{0, 1});
    CHECK(g.layers[0].weight.norm() + g.layers[0].bias.norm() < 1e-8);
}

TEST_CASE("non-finite gradients raise a numeric error with the layer index") {
    auto net = make_net({2, 3, 2}, Activation::tanh, 1);
    net.layers()[0].weight(0, 0) = std::numeric_limits<double>::quiet_NaN();
    Matrix x = Matrix::Ones(1, 2);
    try {
        (void)backward(net, x, std::vector<int>{0});
        FAIL("expected NumericError");
    } catch (const NumericError& e) {
        CHECK(e.layer() < 2);
    }
}

TEST_CASE("predict breaks ties toward the lowest class") {
    DenseLayer L{Matrix::Zero(3, 2), Vector::Zero(3)};
    L.bias << 1.0, 2.0, 2.0;
    Network net({L}, Activation::relu);
    CHECK(predict(net, Matrix::Ones(1, 2)).front() == 1);
    L.bias << 0.0, 0.0, 0.0;
    CHECK(predict(Network({L}, Activation::relu), Matrix::Ones(1, 2)).front() == 0);
}

TEST_CASE("evaluate agrees with a per-sample loop") {
    data::LabeledDataset d;
    d.features = Matrix::Zero(20, 2);
    d.class_count = 10;
    for (int i = 0; i < 20; ++i) d.labels.push_back(i % 10);
    DenseLayer L{Matrix::Zero(10, 2), Vector::Zero(10)};
    L.bias(3) = 1.0;
    Network constant({L}, Activation::relu);
    CHECK(evaluate(constant, d) == doctest::Approx(0.1));

    const auto gmm = test::two_class_gmm(3, 50);
    const auto net = make_net({10, 8, 2}, Activation::relu, 4);
    int correct = 0;
    for (std::size_t i = 0; i < gmm.size(); ++i) {
        std::vector<double> xi(gmm.features.row(static_cast<Eigen::Index>(i)).data(),
                               gmm.features.row(static_cast<Eigen::Index>(i)).data() + 10);
        const auto z = naive_logits(net, xi);
        const int arg = static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
        correct += arg == gmm.labels[i];
    }
    CHECK(evaluate(net, gmm) == doctest::Approx(correct / 100.0));

    // Row order does not matter.
    std::vector<std::size_t> perm(gmm.size());
    std::iota(perm.rbegin(), perm.rend(), 0);
    CHECK(evaluate(net, data::select_rows(gmm, perm)) == evaluate(net, gmm));

    data::LabeledDataset empty;
    empty.class_count = 2;
    empty.features = Matrix(0, 10);
    CHECK_THROWS_AS(evaluate(net, empty), DataError);
}

TEST_CASE("perfect-margin network scores 1") {
    DenseLayer L{Matrix::Zero(2, 10), Vector::Zero(2)};
    data::LabeledDataset d;
    d.features = Matrix(4, 10);
    d.features.setZero();
    d.features(0, 0) = 1;
    d.features(1, 0) = 2;
    d.features(2, 0) = -1;
    d.features(3, 0) = -3;
    d.labels = {0, 0, 1, 1};
    d.class_count = 2;
    L.weight(0, 0) = 10;
    L.weight(1, 0) = -10;
    CHECK(evaluate(Network({L}, Activation::relu), d) == 1.0);
}

TEST_CASE("saliency of a linear model is the absolute weight row") {
    std::mt19937_64 rng(2);
    DenseLayer L{test::random_matrix(3, 5, rng), Vector::Zero(3)};
    L.weight(2, 4) = 0.0;
    Network net({L}, Activation::relu);
    const std::vector<double> x{0.1, -0.2, 0.3, 0.4, 0.5};
    const Vector s = saliency_map(net, x, 2);
    for (Eigen::Index j = 0; j < 5; ++j) CHECK(s(j) == std::abs(L.weight(2, j)));
    CHECK(s(4) == 0.0);
}

TEST_CASE("saliency matches finite differences of the logit") {
    std::mt19937_64 rng(23);
    for (auto act : {Activation::relu, Activation::tanh}) {
        const auto net = make_net({6, 9, 4}, act, 31);
        const Matrix x = test::random_matrix(1, 6, rng);
        for (int c = 0; c < 4; ++c) {
            const Vector s = saliency_map(net, std::span<const double>(x.data(), 6), c);
            for (Eigen::Index j = 0; j < 6; ++j) {
                Matrix p = x, m = x;
                p(0, j) += 1e-5;
                m(0, j) -= 1e-5;
                const double fd = (forward(net, p)(0, c) - forward(net, m)(0, c)) / 2e-5;
                CHECK(test::rel_err(s(j), std::abs(fd)) < 1e-4);
            }
        }
    }
}

TEST_CASE("saliency is zero for inputs without fan-out") {
    auto net = make_net({4, 5, 3}, Activation::tanh, 3);
    net.layers()[0].weight.col(1).setZero();
    const std::vector<double> x{0.3, 0.2, -0.1, 0.7};
    CHECK(saliency_map(net, x, 1)(1) == 0.0);
}

TEST_CASE("flatten and unflatten round-trip") {
    const auto net = make_net({3, 4, 2}, Activation::tanh, 77);
    const Vector flat = flatten_weights(net);
    CHECK(static_cast<std::size_t>(flat.size()) == net.parameter_count());
    const auto sizes = net.layer_sizes();
    const auto back = unflatten_weights(sizes, Activation::tanh, flat);
    CHECK(flatten_weights(back) == flat);
    // Layout: W0 rows, b0, W1 rows, b1.
    CHECK(flat(0) == net.layers()[0].weight(0, 0));
    CHECK(flat(3) == net.layers()[0].weight(1, 0));
    CHECK(flat(12) == net.layers()[0].bias(0));
    CHECK(flat(16) == net.layers()[1].weight(0, 0));

    auto other = net;
    other.layers()[1].bias(1) += 1.0;
    const Vector diff = flatten_weights(other) - flat;
    CHECK((diff.array() != 0.0).count() == 1);
    CHECK_THROWS_AS(unflatten_weights(sizes, Activation::tanh, Vector::Zero(5)), ShapeError);
}

TEST_CASE("learning rate schedule") {
    TrainSchedule s{.epochs = 10, .batch_size = 4, .lr_initial = 0.1, .lr_drop_epoch = 3, .lr_drop_factor = 0.5};
    CHECK(s.learning_rate(1) == 0.1);
    CHECK(s.learning_rate(3) == 0.1);
    CHECK(s.learning_rate(4) == 0.05);
    CHECK(s.learning_rate(10) == 0.05);
    TrainSchedule bad = s;
    bad.lr_drop_factor = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = s;
    bad.momentum = 1.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = s;
    bad.epochs = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("training reaches the Bayes regime on a separated mixture") {
    const auto d = test::two_class_gmm(1, 500);
    auto parts = data::split(d, {0.7, 0.1, 0.2, 1});
    const auto net = make_net({10, 32, 32, 2}, Activation::relu, 5);
    TrainSchedule s;
    s.epochs = 30;
    const auto r = train(net, parts.train, s, 9, {.eval_set = &parts.test});
    CHECK(r.record.accuracy.size() == 30);
    CHECK(r.record.train_loss.size() == 30);
    CHECK(r.record.accuracy.back() >= 0.95);
    CHECK(r.record.snapshots.empty());

    const auto again = train(net, parts.train, s, 9, {.eval_set = &parts.test});
    CHECK(again.record.train_loss == r.record.train_loss);
    CHECK(again.record.accuracy == r.record.accuracy);
    CHECK(flatten_weights(again.net) == flatten_weights(r.net));
}

TEST_CASE("zero learning rate leaves the weights untouched") {
    const auto d = test::two_class_gmm(2, 50);
    const auto net = make_net({10, 4, 2}, Activation::tanh, 6);
    TrainSchedule s{.epochs = 3, .batch_size = 16, .lr_initial = 0.0};
    const auto r = train(net, d, s, 1, {.keep_snapshots = true});
    CHECK(flatten_weights(r.net) == flatten_weights(net));
    CHECK(r.record.snapshots.size() == 3);
}

TEST_CASE("full-batch descent on a convex softmax problem never increases the loss") {
    const auto d = test::two_class_gmm(4, 100);
    auto net = make_net({10, 2}, Activation::relu, 2);
    double prev = loss_of(net, d.features, d.labels);
    bool monotone = true;
    for (int step = 0; step < 100; ++step) {
        const auto g = backward(net, d.features, d.labels);
        for (std::size_t l = 0; l < net.layers().size(); ++l) {
            net.layers()[l].weight -= 0.01 * g.layers[l].weight;
            net.layers()[l].bias -= 0.01 * g.layers[l].bias;
        }
        const double now = loss_of(net, d.features, d.labels);
        monotone = monotone && now <= prev + 1e-15;
        prev = now;
    }
    CHECK(monotone);
}

TEST_CASE("divergence is reported with its epoch") {
    auto d = test::two_class_gmm(5, 50);
    d.features *= 1e150;
    const auto net = make_net({10, 8, 2}, Activation::relu, 1);
    TrainSchedule s{.epochs = 5, .batch_size = 10, .lr_initial = 10.0};
    try {
        (void)train(net, d, s, 1);
        FAIL("expected TrainingError");
    } catch (const TrainingError& e) {
        CHECK(e.epoch() >= 1);
        CHECK(e.epoch() <= 5);
    }
}

TEST_CASE("training rejects labels beyond the output layer") {
    auto d = test::two_class_gmm(5, 10);
    d.labels[0] = 2;
    d.class_count = 3;
    const auto net = make_net({10, 2}, Activation::relu, 1);
    CHECK_THROWS_AS(train(net, d, {.epochs = 1}, 1), Error);
}

} // TEST_SUITE
