#include "oracles.hpp"

#include "steinselect/error.hpp"
#include "steinselect/refit.hpp"

#include <doctest.h>

#include <cmath>

using namespace steinselect;

namespace {

RefitConfig small_config(int epochs, std::uint64_t seed = 3) {
    RefitConfig cfg;
    cfg.hidden = {16, 8};
    cfg.epochs = epochs;
    cfg.batch_size = 32;
    cfg.learning_rate = 1e-2;
    cfg.seed = seed;
    return cfg;
}

Dataset normal_data(Index n, Index p, std::uint64_t seed, const std::function<double(const VectorXd&)>& f) {
    std::mt19937_64 rng(seed);
    const MatrixXd x = oracle::normal_matrix(n, p, rng);
    VectorXd y(n);
    for (Index i = 0; i < n; ++i) y(i) = f(x.row(i).transpose());
    return Dataset(x, y);
}

double population_variance(const VectorXd& v) { return (v.array() - v.mean()).square().mean(); }

}  // namespace

TEST_CASE("config validation") {
    RefitConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.hidden = {};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = RefitConfig{};
    cfg.hidden = {4, 0};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = RefitConfig{};
    cfg.epochs = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = RefitConfig{};
    cfg.learning_rate = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = RefitConfig{};
    cfg.batch_size = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    CHECK(parse_optimizer("adam") == Optimizer::adaptive_moment);
    CHECK_THROWS_AS(parse_optimizer("rmsprop"), ConfigError);
}

TEST_CASE("initialization bounds") {
    Rng rng = make_rng(5, "init");
    const Mlp net = Mlp::initialize(10, {64, 32}, rng);
    REQUIRE(net.layers().size() == 3);
    const double a0 = std::sqrt(6.0 / 74.0);
    CHECK(net.layers()[0].weights.rows() == 64);
    CHECK(net.layers()[0].weights.cols() == 10);
    CHECK(net.layers()[0].weights.cwiseAbs().maxCoeff() < a0);
    CHECK(net.layers()[0].weights.cwiseAbs().maxCoeff() > 0.8 * a0);
    CHECK(net.layers()[2].weights.rows() == 1);
    for (const auto& l : net.layers()) CHECK(l.bias.isZero());
    CHECK(net.parameter_count() == 64 * 10 + 64 + 32 * 64 + 32 + 32 + 1);
}

TEST_CASE("parameter flattening round trip") {
    Rng rng = make_rng(6, "init");
    Mlp net = Mlp::initialize(3, {4}, rng);
    VectorXd theta = VectorXd::LinSpaced(net.parameter_count(), -1, 1);
    net.set_parameters(theta);
    CHECK(net.parameters() == theta);
    CHECK_THROWS_AS(net.set_parameters(VectorXd::Zero(3)), DimensionError);
}

TEST_CASE("gradient matches central finite differences") {
    // 2 inputs, hidden [3, 2], scalar output, 8 samples, h = 1e-5, 100 parameter draws.
    constexpr double h = 1e-5;
    constexpr double tolerance = 1e-4;
    std::mt19937_64 rng(71);
    const MatrixXd inputs = oracle::normal_matrix(2, 8, rng);
    const VectorXd targets = oracle::normal_matrix(8, 1, rng).col(0);
    Rng init = make_rng(7, "init");
    Mlp net = Mlp::initialize(2, {3, 2}, init);
    REQUIRE(net.parameter_count() == 2 * 3 + 3 + 3 * 2 + 2 + 2 + 1);

    double worst = 0.0;
    std::normal_distribution<double> z;
    for (int draw = 0; draw < 100; ++draw) {
        VectorXd theta(net.parameter_count());
        for (Index i = 0; i < theta.size(); ++i) theta(i) = z(rng);
        net.set_parameters(theta);
        const VectorXd analytic = loss_gradient(net, inputs, targets).flatten();
        for (Index i = 0; i < theta.size(); ++i) {
            VectorXd plus = theta, minus = theta;
            plus(i) += h;
            minus(i) -= h;
            net.set_parameters(plus);
            const double lp = loss_gradient(net, inputs, targets).loss;
            net.set_parameters(minus);
            const double lm = loss_gradient(net, inputs, targets).loss;
            const double numeric = (lp - lm) / (2.0 * h);
            const double rel = std::abs(analytic(i) - numeric) / std::max({1e-6, std::abs(analytic(i)), std::abs(numeric)});
            worst = std::max(worst, rel);
        }
        net.set_parameters(theta);
    }
    CHECK(worst <= tolerance);
}

TEST_CASE("loss equals the mean squared error of the forward pass") {
    std::mt19937_64 rng(72);
    const MatrixXd inputs = oracle::normal_matrix(3, 20, rng);
    const VectorXd targets = oracle::normal_matrix(20, 1, rng).col(0);
    Rng init = make_rng(8, "init");
    const Mlp net = Mlp::initialize(3, {5}, init);
    const double mse = (net.forward(inputs) - targets).squaredNorm() / 20.0;
    CHECK(loss_gradient(net, inputs, targets).loss == doctest::Approx(mse).epsilon(1e-14));
}

TEST_CASE("constant response is fitted") {
    const Dataset d = normal_data(500, 3, 73, [](const VectorXd&) { return 7.0; });
    const std::vector<Index> sel{0, 2};
    const RefitModel m = train(d, sel, small_config(50));
    CHECK(m.final_train_mse <= 1e-2);
    CHECK((predict(m, d).array() - 7.0).abs().maxCoeff() <= 0.2);
    const Dataset fresh = normal_data(200, 3, 74, [](const VectorXd&) { return 0.0; });
    CHECK((predict(m, fresh.x()).array() - 7.0).abs().maxCoeff() <= 0.2);
}

TEST_CASE("noiseless linear target is learned") {
    const auto f = [](const VectorXd& x) { return 3.0 * x(0); };
    const Dataset train_set = normal_data(2000, 3, 75, f);
    const Dataset test_set = normal_data(1000, 3, 76, f);
    RefitConfig cfg;  // defaults
    cfg.seed = 9;
    const std::vector<Index> sel{0};
    const RefitModel m = train(train_set, sel, cfg);
    CHECK(m.loss_curve.size() == 300);
    CHECK(m.final_train_mse <= m.initial_train_mse);
    CHECK(evaluate_mse(m, test_set) <= 0.05 * population_variance(test_set.y()));
    CHECK(evaluate_mse(m, train_set) <= 0.05);
}

TEST_CASE("both optimizers train deterministically") {
    const Dataset d = normal_data(300, 4, 77, [](const VectorXd& x) { return x(1) * x(1) - x(3); });
    const std::vector<Index> sel{1, 3};
    for (Optimizer opt : {Optimizer::sgd_momentum, Optimizer::adaptive_moment}) {
        RefitConfig cfg = small_config(20);
        cfg.optimizer = opt;
        const RefitModel a = train(d, sel, cfg);
        const RefitModel b = train(d, sel, cfg);
        CHECK(a.loss_curve == b.loss_curve);
        CHECK(a.net.parameters() == b.net.parameters());
        CHECK(a.final_train_mse < a.initial_train_mse);
        cfg.seed += 1;
        CHECK(train(d, sel, cfg).loss_curve != a.loss_curve);
    }
}

TEST_CASE("batch larger than n is clipped") {
    const Dataset d = normal_data(10, 2, 78, [](const VectorXd& x) { return x(0); });
    RefitConfig cfg = small_config(5);
    cfg.batch_size = 1000;
    const std::vector<Index> sel{0};
    CHECK(train(d, sel, cfg).loss_curve.size() == 5);
}

TEST_CASE("divergence is reported with the step") {
    const Dataset d = normal_data(100, 2, 79, [](const VectorXd& x) { return 100.0 * x(0); });
    RefitConfig cfg = small_config(50);
    cfg.learning_rate = 1e6;
    const std::vector<Index> sel{0, 1};
    try {
        train(d, sel, cfg);
        FAIL("expected divergence");
    } catch (const DivergenceError& e) {
        CHECK(e.step() >= 0);
        CHECK(std::string(e.what()).find("step") != std::string::npos);
    }
}

TEST_CASE("train argument checks") {
    const Dataset d = normal_data(20, 2, 80, [](const VectorXd& x) { return x(0); });
    CHECK_THROWS_AS(train(d, {}, small_config(1)), ConfigError);
    const std::vector<Index> bad{2};
    CHECK_THROWS_AS(train(d, bad, small_config(1)), DimensionError);
}

TEST_CASE("prediction input shapes") {
    const Dataset d = normal_data(200, 5, 81, [](const VectorXd& x) { return x(1) + x(4); });
    const std::vector<Index> sel{1, 4};
    const RefitModel m = train(d, sel, small_config(10));
    const VectorXd full = predict(m, d.x());
    const VectorXd sub = predict(m, d.select_columns(sel).x());
    CHECK(full == sub);
    CHECK(predict(m, d) == full);
    CHECK_THROWS_AS(predict(m, MatrixXd::Zero(3, 4)), DimensionError);
    const Dataset other(d.x(), d.y(), {"a", "b", "c", "d", "e"});
    CHECK_THROWS_AS(predict(m, other), DimensionError);
    CHECK(full.allFinite());
}

TEST_CASE("mean predictor scores the population variance") {
    const Dataset test = normal_data(300, 2, 82, [](const VectorXd& x) { return 2.0 * x(0) + 1.0; });
    Rng init = make_rng(1, "init");
    RefitModel m;
    m.net = Mlp::initialize(1, {2}, init);
    m.net.set_parameters(VectorXd::Zero(m.net.parameter_count()));
    m.feature_ids = {"x0"};
    m.feature_indices = {0};
    m.training_p = 2;
    m.input_mean = VectorXd::Zero(1);
    m.input_scale = VectorXd::Ones(1);
    m.target_mean = test.y().mean();
    m.target_scale = 1.0;
    CHECK(std::abs(evaluate_mse(m, test) - population_variance(test.y())) <= 1e-9);
}

TEST_CASE("standardized training ignores affine rescaling of the inputs") {
    const Dataset d = normal_data(400, 3, 83, [](const VectorXd& x) { return x(0) * x(0) + x(2); });
    MatrixXd shifted = d.x();
    shifted.col(0) = 40.0 * shifted.col(0).array() + 3.0;
    shifted.col(2) = 0.01 * shifted.col(2).array() - 5.0;
    const Dataset e(shifted, d.y());
    const std::vector<Index> sel{0, 2};
    const RefitConfig cfg = small_config(40);
    const VectorXd a = predict(train(d, sel, cfg), d);
    const VectorXd b = predict(train(e, sel, cfg), e);
    CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-6);
}
