#include "steinselect/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <set>
#include <thread>

namespace steinselect {

namespace {

void check_indices(const std::vector<Index>& set, Index p, const char* what) {
    for (Index j : set) {
        if (j < 0 || j >= p) {
            throw ConfigError(std::string(what) + " index " + std::to_string(j) + " outside [0, " +
                              std::to_string(p) + ")");
        }
    }
}

std::pair<double, double> mean_sd(const std::vector<double>& values) {
    if (values.empty()) return {std::nan(""), std::nan("")};
    double sum = 0.0;
    for (double v : values) sum += v;
    const double mean = sum / static_cast<double>(values.size());
    double sq = 0.0;
    for (double v : values) sq += (v - mean) * (v - mean);
    return {mean, std::sqrt(sq / static_cast<double>(values.size()))};
}

}  // namespace

SelectionMetrics selection_metrics(const std::vector<Index>& selected, const std::vector<Index>& truth, Index p) {
    const std::set<Index> t(truth.begin(), truth.end());
    const std::set<Index> s(selected.begin(), selected.end());
    if (t.empty()) throw ConfigError("truth set must not be empty");
    if (static_cast<Index>(t.size()) >= p) throw ConfigError("truth covers all p features; FPR is undefined");
    check_indices(truth, p, "truth");
    check_indices(selected, p, "selected");

    Index hits = 0;
    for (Index j : s) hits += t.count(j) ? 1 : 0;
    SelectionMetrics m;
    m.selected_count = static_cast<Index>(s.size());
    m.truth_count = static_cast<Index>(t.size());
    m.tpr = static_cast<double>(hits) / static_cast<double>(t.size());
    m.fpr = static_cast<double>(m.selected_count - hits) / static_cast<double>(p - m.truth_count);
    return m;
}

ReplicationSummary summarize(std::vector<ReplicationRecord> records, std::string fingerprint) {
    std::sort(records.begin(), records.end(), [](const auto& a, const auto& b) { return a.seed < b.seed; });
    ReplicationSummary out;
    std::vector<double> tpr, fpr, mse;
    for (const auto& r : records) {
        out.runtime_ms += r.runtime_ms;
        if (!r.ok) {
            ++out.failures;
            continue;
        }
        ++out.successes;
        tpr.push_back(r.metrics.tpr);
        fpr.push_back(r.metrics.fpr);
        if (!std::isnan(r.mse)) mse.push_back(r.mse);
    }
    if (!tpr.empty()) {
        std::tie(out.tpr_mean, out.tpr_sd) = mean_sd(tpr);
        std::tie(out.fpr_mean, out.fpr_sd) = mean_sd(fpr);
    } else {
        out.tpr_mean = out.tpr_sd = out.fpr_mean = out.fpr_sd = std::nan("");
    }
    std::tie(out.mse_mean, out.mse_sd) = mean_sd(mse);
    out.records = std::move(records);
    out.fingerprint = std::move(fingerprint);
    return out;
}

ReplicationRecord run_replication(const SimSpec& spec, const PipelineConfig& cfg) {
    const auto start = std::chrono::steady_clock::now();
    ReplicationRecord rec;
    rec.seed = spec.seed;
    try {
        auto [data, truth] = simulate(spec);
        rec.support = truth.support;
        std::optional<CovarianceModel> known;
        if (cfg.covariance == CovarianceSource::Kind::known) known = known_covariance(ar1_covariance(spec.p, spec.rho));

        const PipelineOutput out = run_selection(data, cfg, known);
        rec.selected = out.selection.selected;
        rec.k1_used = out.selection.k1_used;
        rec.s_used = static_cast<Index>(rec.selected.size());
        rec.metrics = selection_metrics(rec.selected, truth.support, spec.p);
        if (out.trace) {
            const auto& fin = out.trace->final_indices;
            rec.support_retained = std::all_of(truth.support.begin(), truth.support.end(), [&](Index j) {
                return std::binary_search(fin.begin(), fin.end(), j);
            });
        }
        if (cfg.evaluate_refit) {
            if (rec.selected.empty()) throw NumericalError("empty selection; nothing to refit");
            RefitConfig rc = cfg.refit;
            rc.seed = derive_seed(spec.seed, "refit");
            const RefitModel model = train(data, rec.selected, rc);
            const Dataset test = simulate_from_truth(spec, truth, cfg.n_test, derive_seed(spec.seed, "test"));
            rec.mse = evaluate_mse(model, test);
        }
        rec.ok = true;
    } catch (const std::exception& e) {
        rec.ok = false;
        rec.error = e.what();
    }
    rec.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return rec;
}

ReplicationSummary run_replications(const SimSpec& base, const PipelineConfig& cfg,
                                    const std::vector<std::uint64_t>& seeds, int jobs,
                                    const ReplicationRunner& runner) {
    if (seeds.empty()) throw ConfigError("replications need at least one seed");
    if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
        throw ConfigError("replication seeds must be distinct");
    }
    base.validate();
    cfg.validate();

    std::vector<ReplicationRecord> records(seeds.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < seeds.size(); i = next++) {
            SimSpec spec = base;
            spec.seed = seeds[i];
            try {
                records[i] = runner(spec, cfg);
            } catch (const std::exception& e) {
                records[i] = ReplicationRecord{};
                records[i].error = e.what();
            }
            records[i].seed = seeds[i];
        }
    };
    const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(seeds.size())));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    return summarize(std::move(records), config_fingerprint(base, cfg));
}

std::string config_fingerprint(const SimSpec& base, const PipelineConfig& cfg) {
    const std::string text = "case=" + std::to_string(static_cast<int>(base.sim_case)) + ";n=" +
                             std::to_string(base.n) + ";p=" + std::to_string(base.p) + ";s=" +
                             std::to_string(base.s) + ";k1=" + std::to_string(base.k1) + ";rho=" +
                             format_double(base.rho) + ";design=" + base.design.name() + ";noise_sd=" +
                             format_double(base.noise_sd) + "|" + cfg.describe();
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(detail::fnv1a(text)));
    return buf;
}

}  // namespace steinselect
