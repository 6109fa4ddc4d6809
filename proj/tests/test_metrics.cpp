#include "steinselect/error.hpp"
#include "steinselect/metrics.hpp"

#include <doctest.h>

#include <algorithm>
#include <stdexcept>

using namespace steinselect;

namespace {

ReplicationRecord ok_record(std::uint64_t seed, double tpr, double fpr = 0.0) {
    ReplicationRecord r;
    r.seed = seed;
    r.ok = true;
    r.metrics.tpr = tpr;
    r.metrics.fpr = fpr;
    return r;
}

PipelineConfig small_pipeline() {
    PipelineConfig cfg;
    cfg.k1 = 2;
    cfg.s = 3;
    return cfg;
}

const SimSpec small_spec{.sim_case = SimCase::case1, .n = 400, .p = 30, .s = 3, .k1 = 2, .seed = 0};

}  // namespace

TEST_CASE("selection metric examples") {
    const std::vector<Index> truth{0, 1, 2, 3, 4};
    auto m = selection_metrics({0, 1, 2, 3, 4}, truth, 10);
    CHECK(m.tpr == 1.0);
    CHECK(m.fpr == 0.0);
    m = selection_metrics({}, truth, 10);
    CHECK(m.tpr == 0.0);
    CHECK(m.fpr == 0.0);
    m = selection_metrics({0, 1, 5}, {0, 1, 2, 3}, 8);
    CHECK(m.tpr == 0.5);
    CHECK(m.fpr == 0.25);
    CHECK(m.selected_count == 3);
    CHECK(m.truth_count == 4);
}

TEST_CASE("selection metric errors") {
    CHECK_THROWS_AS(selection_metrics({0}, {}, 10), ConfigError);
    CHECK_THROWS_AS(selection_metrics({0}, {0, 1, 2}, 3), ConfigError);
}

TEST_CASE("selection metrics stay in the unit interval") {
    std::mt19937_64 rng(91);
    for (int rep = 0; rep < 200; ++rep) {
        const Index p = 5 + static_cast<Index>(rng() % 20);
        std::vector<Index> sel, truth;
        for (Index j = 0; j < p; ++j) {
            if (rng() % 3 == 0) sel.push_back(j);
            if (rng() % 4 == 0) truth.push_back(j);
        }
        if (truth.empty()) truth.push_back(0);
        if (static_cast<Index>(truth.size()) == p) truth.pop_back();
        const auto m = selection_metrics(sel, truth, p);
        CHECK(m.tpr >= 0.0);
        CHECK(m.tpr <= 1.0);
        CHECK(m.fpr >= 0.0);
        CHECK(m.fpr <= 1.0);
    }
}

TEST_CASE("summary statistics") {
    const ReplicationSummary one = summarize({ok_record(1, 0.7)});
    CHECK(one.tpr_mean == 0.7);
    CHECK(one.tpr_sd == 0.0);

    const ReplicationSummary two = summarize({ok_record(2, 0.8), ok_record(1, 1.0)});
    CHECK(two.tpr_mean == doctest::Approx(0.9));
    CHECK(two.tpr_sd == doctest::Approx(0.1));  // population sd
    CHECK(two.records.front().seed == 1);
    CHECK(std::isnan(two.mse_mean));
}

TEST_CASE("failures are recorded and excluded from the statistics") {
    const ReplicationRunner runner = [](const SimSpec& spec, const PipelineConfig&) {
        if (spec.seed == 2) {
            ReplicationRecord r;
            r.seed = spec.seed;
            r.error = "injected";
            return r;
        }
        return ok_record(spec.seed, 1.0);
    };
    const ReplicationSummary s = run_replications(small_spec, small_pipeline(), {1, 2, 3}, 1, runner);
    CHECK(s.successes == 2);
    CHECK(s.failures == 1);
    CHECK(s.records.size() == 3);
    CHECK_FALSE(s.records[1].ok);
    CHECK(s.records[1].error == "injected");
    CHECK(s.tpr_mean == 1.0);
}

TEST_CASE("thrown runner errors are captured as failures") {
    const ReplicationRunner runner = [](const SimSpec& spec, const PipelineConfig&) -> ReplicationRecord {
        if (spec.seed == 5) throw std::runtime_error("boom");
        return ok_record(spec.seed, 0.5);
    };
    const ReplicationSummary s = run_replications(small_spec, small_pipeline(), {4, 5}, 2, runner);
    CHECK(s.failures == 1);
    CHECK(s.records[1].error.find("boom") != std::string::npos);
}

TEST_CASE("run_replication catches pipeline errors") {
    PipelineConfig cfg = small_pipeline();
    cfg.k1 = 40;  // more than p
    SimSpec spec = small_spec;
    spec.seed = 9;
    const ReplicationRecord r = run_replication(spec, cfg);
    CHECK_FALSE(r.ok);
    CHECK_FALSE(r.error.empty());
}

TEST_CASE("replications are order and thread independent") {
    const std::vector<std::uint64_t> seeds{5, 1, 4, 2, 3};
    std::vector<std::uint64_t> reversed(seeds.rbegin(), seeds.rend());
    const ReplicationSummary a = run_replications(small_spec, small_pipeline(), seeds, 1);
    const ReplicationSummary b = run_replications(small_spec, small_pipeline(), reversed, 3);
    REQUIRE(a.records.size() == 5);
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(a.records[i].seed == i + 1);
        CHECK(a.records[i].seed == b.records[i].seed);
        CHECK(a.records[i].selected == b.records[i].selected);
        CHECK(a.records[i].metrics.tpr == b.records[i].metrics.tpr);
    }
    CHECK(a.tpr_mean == b.tpr_mean);
    CHECK(a.fpr_sd == b.fpr_sd);
    double lo = 1.0, hi = 0.0;
    for (const auto& r : a.records) {
        lo = std::min(lo, r.metrics.tpr);
        hi = std::max(hi, r.metrics.tpr);
    }
    CHECK(a.tpr_mean >= lo);
    CHECK(a.tpr_mean <= hi);
}

TEST_CASE("seeds must be distinct") {
    CHECK_THROWS_AS(run_replications(small_spec, small_pipeline(), {1, 1}), ConfigError);
    CHECK_THROWS_AS(run_replications(small_spec, small_pipeline(), {}), ConfigError);
}

TEST_CASE("held-out MSE is reported when refit evaluation is on") {
    PipelineConfig cfg = small_pipeline();
    cfg.evaluate_refit = true;
    cfg.n_test = 200;
    cfg.refit.hidden = {8};
    cfg.refit.epochs = 5;
    SimSpec spec = small_spec;
    spec.seed = 17;
    const ReplicationRecord r = run_replication(spec, cfg);
    REQUIRE(r.ok);
    CHECK(std::isfinite(r.mse));
    CHECK(r.mse > 0.0);
    CHECK(run_replication(spec, cfg).mse == r.mse);
}

TEST_CASE("fingerprint ignores the seed and tracks the config") {
    SimSpec other = small_spec;
    other.seed = 99;
    CHECK(config_fingerprint(small_spec, small_pipeline()) == config_fingerprint(other, small_pipeline()));
    CHECK(config_fingerprint(small_spec, small_pipeline()).size() == 16);
    PipelineConfig cfg = small_pipeline();
    cfg.s = 4;
    CHECK(config_fingerprint(small_spec, cfg) != config_fingerprint(small_spec, small_pipeline()));
    other.n = 401;
    CHECK(config_fingerprint(other, small_pipeline()) != config_fingerprint(small_spec, small_pipeline()));
}
