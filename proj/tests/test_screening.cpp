#include "steinselect/error.hpp"
#include "steinselect/screening.hpp"
#include "steinselect/simulate.hpp"

#include <doctest.h>

#include <algorithm>
#include <numeric>

using namespace steinselect;

namespace {

// Rows +-c_k e_k (n = 2p) with y = 1 and Sigma = I give
// A_kk = c_k^2 / p - 1, so c_k^2 = p (m_k + 1) yields A_kk = m_k.
Dataset diagonal_probe(const std::vector<double>& magnitudes) {
    const auto p = static_cast<Index>(magnitudes.size());
    MatrixXd x = MatrixXd::Zero(2 * p, p);
    for (Index k = 0; k < p; ++k) {
        const double c = std::sqrt(static_cast<double>(p) * (magnitudes[static_cast<std::size_t>(k)] + 1.0));
        x(2 * k, k) = c;
        x(2 * k + 1, k) = -c;
    }
    return Dataset(x, VectorXd::Ones(2 * p), Dataset::default_ids(p), true);
}

std::vector<Index> all_indices(Index p) {
    std::vector<Index> v(static_cast<std::size_t>(p));
    std::iota(v.begin(), v.end(), Index{0});
    return v;
}

bool contains_all(const std::vector<Index>& set, const std::vector<Index>& sub) {
    return std::includes(set.begin(), set.end(), sub.begin(), sub.end());
}

}  // namespace

TEST_CASE("screen_once keeps the largest diagonal magnitudes") {
    const Dataset d = diagonal_probe({3, 5, 1, 0.5});
    const CovarianceSource src = CovarianceSource::from_known(known_covariance(MatrixXd::Identity(4, 4)));
    VectorXd diag;
    const std::vector<Index> kept = screen_once(d, all_indices(4), src, 0.5, &diag);
    CHECK(kept == std::vector<Index>{0, 1});
    CHECK((diag - Eigen::Vector4d(3, 5, 1, 0.5)).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("keep p - 1 drops exactly the smallest magnitude") {
    const Dataset d = diagonal_probe({3, 5, 1, 0.5, 2});
    const CovarianceSource src = CovarianceSource::from_known(known_covariance(MatrixXd::Identity(5, 5)));
    CHECK(screen_once(d, all_indices(5), src, 0.8) == std::vector<Index>{0, 1, 2, 4});
}

TEST_CASE("screen_once guards") {
    const Dataset d = diagonal_probe({1, 2, 3, 4, 5});
    const CovarianceSource src = CovarianceSource::from_known(known_covariance(MatrixXd::Identity(5, 5)));
    CHECK_THROWS_AS(screen_once(d, all_indices(5), src, 0.1), ConfigError);
    const std::vector<Index> one{2};
    CHECK_THROWS_AS(screen_once(d, one, src, 0.5), ConfigError);
}

TEST_CASE("floor arithmetic of the schedule") {
    CHECK(screening_schedule(1000, 0.5, 100) == std::vector<Index>{1000, 500, 250, 125, 62});
    CHECK(screening_schedule(50, 0.5, 100) == std::vector<Index>{50});
    CHECK(screening_schedule(2000, 0.15874010519681994, 26) == std::vector<Index>{2000, 317, 50, 7});
    CHECK(screening_schedule(30, 0.1, 2, 5) == std::vector<Index>{30, 5});
}

TEST_CASE("auto defaults") {
    const ScreeningConfig cfg{.auto_defaults = true};
    const ScreeningConfig eff = cfg.resolved(2000);
    CHECK(eff.zeta == doctest::Approx(2.0 / std::cbrt(2000.0)));
    CHECK(eff.p0 == 26);
    CHECK(cfg.resolved(5).zeta == 0.9);
}

TEST_CASE("config validation") {
    CHECK_THROWS_AS((ScreeningConfig{.zeta = 1.5, .p0 = 10}.validate()), ConfigError);
    CHECK_THROWS_AS((ScreeningConfig{.zeta = 0.0, .p0 = 10}.validate()), ConfigError);
    CHECK_THROWS_AS((ScreeningConfig{.zeta = 0.5, .p0 = 0}.validate()), ConfigError);
    CHECK_THROWS_AS((ScreeningConfig{.zeta = 0.5, .p0 = 10, .max_rounds = 0}.validate()), ConfigError);
}

TEST_CASE("screening a 1000-feature problem follows the schedule") {
    const auto [data, truth] = simulate({.sim_case = SimCase::case1, .n = 300, .p = 1000, .s = 5, .k1 = 2, .seed = 51});
    const Dataset d = center_response(center_columns(data));
    const ScreeningConfig cfg{.zeta = 0.5, .p0 = 100};
    const ScreeningTrace t = screen(d, cfg, CovarianceSource::automatic());
    std::vector<Index> sizes{static_cast<Index>(t.initial.size())};
    for (const auto& r : t.rounds) sizes.push_back(static_cast<Index>(r.kept.size()));
    CHECK(sizes == std::vector<Index>{1000, 500, 250, 125, 62});

    std::vector<Index> previous = t.initial;
    for (const auto& r : t.rounds) {
        CHECK(r.kept.size() < previous.size());
        CHECK(std::is_sorted(r.kept.begin(), r.kept.end()));
        CHECK(contains_all(previous, r.kept));
        CHECK(r.diagonal.size() == static_cast<Index>(previous.size()));
        previous = r.kept;
    }
    CHECK(t.final_indices == t.rounds.back().kept);

    const ScreeningTrace again = screen(d, cfg, CovarianceSource::automatic());
    CHECK(again.final_indices == t.final_indices);
    for (std::size_t r = 0; r < t.rounds.size(); ++r) CHECK(again.rounds[r].diagonal == t.rounds[r].diagonal);
}

TEST_CASE("iteration limit carries the trace") {
    const auto [data, truth] = simulate({.sim_case = SimCase::case1, .n = 100, .p = 400, .s = 5, .k1 = 2, .seed = 52});
    const Dataset d = center_response(center_columns(data));
    try {
        screen(d, ScreeningConfig{.zeta = 0.5, .p0 = 10, .max_rounds = 2}, CovarianceSource::ledoit_wolf());
        FAIL("expected an iteration limit");
    } catch (const IterationLimitError& e) {
        CHECK(e.trace().rounds.size() == 2);
        CHECK(e.trace().final_indices.size() == 100);
    }
}

TEST_CASE("known covariance subsets use the principal submatrix") {
    const CovarianceModel full = known_covariance(ar1_covariance(6, 0.5));
    const std::vector<Index> subset{1, 4, 5};
    const Dataset sub(MatrixXd::Zero(2, 3), VectorXd::Zero(2), Dataset::default_ids(3), true);
    const CovarianceModel c = covariance_for(CovarianceSource::from_known(full), sub, subset);
    for (Index a = 0; a < 3; ++a)
        for (Index b = 0; b < 3; ++b) CHECK(c.sigma(a, b) == full.sigma(subset[a], subset[b]));
    CHECK((c.sigma_inv * c.sigma - MatrixXd::Identity(3, 3)).norm() <= 1e-12);
}

TEST_CASE("automatic source switches to Ledoit-Wolf when features exceed n/2") {
    const auto [data, truth] = simulate({.sim_case = SimCase::case1, .n = 100, .p = 60, .s = 5, .k1 = 2, .seed = 53});
    const Dataset d = center_response(center_columns(data));
    const auto all = all_indices(60);
    CHECK(covariance_for(CovarianceSource::automatic(), d, all).method == CovarianceMethod::ledoit_wolf);
    const std::vector<Index> few{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    CHECK(covariance_for(CovarianceSource::automatic(), d.select_columns(few), few).method == CovarianceMethod::sample);
}

TEST_CASE("no rounds when p <= p0: identical to plain selection") {
    const auto [data, truth] = simulate({.sim_case = SimCase::case1, .n = 500, .p = 40, .s = 4, .k1 = 2, .seed = 54});
    const Dataset d = center_response(center_columns(data));
    const ScreenedSelection s = screen_and_select(d, {.zeta = 0.5, .p0 = 50}, 2, TopSRule{4}, CovarianceSource::sample());
    CHECK(s.trace.rounds.empty());
    const SelectionResult plain = select(stein_moment(d, sample_covariance(d)), 2, TopSRule{4});
    CHECK(s.selection.selected == plain.selected);
    CHECK(s.selection.column_scores == plain.column_scores);
}

TEST_CASE("screen_and_select argument checks") {
    const auto [data, truth] = simulate({.sim_case = SimCase::case1, .n = 200, .p = 300, .s = 4, .k1 = 2, .seed = 55});
    const Dataset d = center_response(center_columns(data));
    CHECK_THROWS_AS(screen_and_select(d, {.zeta = 0.5, .p0 = 20}, 30, TopSRule{4}, CovarianceSource::automatic()), ConfigError);
    CHECK_THROWS_AS(screen_and_select(d, {.zeta = 0.5, .p0 = 20}, 0, TopSRule{4}, CovarianceSource::automatic()), ConfigError);
}

TEST_CASE("selection reported in original indices") {
    const auto [data, truth] = simulate({.sim_case = SimCase::case1, .n = 1500, .p = 400, .s = 5, .k1 = 2, .seed = 56});
    const Dataset d = center_response(center_columns(data));
    const ScreenedSelection s = screen_and_select(d, {.zeta = 0.5, .p0 = 40}, 2, TopSRule{5}, CovarianceSource::automatic());
    CHECK(contains_all(s.trace.final_indices, s.selection.selected));
    CHECK(s.selection.column_scores.size() == 400);
    CHECK(s.selection.w_hat.cols() == 400);
    for (Index j = 0; j < 400; ++j) {
        if (!std::binary_search(s.trace.final_indices.begin(), s.trace.final_indices.end(), j)) {
            CHECK(s.selection.column_scores(j) == 0.0);
        }
    }
    CHECK(s.selection.selected == truth.support);
}

TEST_CASE("one Ledoit-Wolf round at zeta 0.1 retains the case 2 support") {
    const auto [data, truth] = simulate({.sim_case = SimCase::case2, .n = 2000, .p = 2000, .seed = 3});
    const Dataset d = center_response(center_columns(data));
    const std::vector<Index> kept = screen_once(d, all_indices(2000), CovarianceSource::ledoit_wolf(), 0.1);
    CHECK(kept.size() == 200);
    CHECK(contains_all(kept, truth.support));
}

TEST_CASE("case 1 at p = 2000 with automatic defaults recovers the support") {
    const auto [data, truth] = simulate({.sim_case = SimCase::case1, .n = 2000, .p = 2000, .seed = 5});
    const Dataset d = center_response(center_columns(data));
    const ScreenedSelection s =
        screen_and_select(d, {.auto_defaults = true}, 5, TopSRule{5}, CovarianceSource::automatic());
    CHECK(s.trace.p0 == 26);
    CHECK(s.selection.selected == truth.support);
}
