#pragma once

#include "steinselect/pipeline.hpp"
#include "steinselect/simulate.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace steinselect {

struct SelectionMetrics {
    double tpr = 0.0;
    double fpr = 0.0;
    Index selected_count = 0;
    Index truth_count = 0;
};

/// tpr = |S & T| / |T|, fpr = |S \ T| / (p - |T|). Throws ConfigError for an
/// empty truth or one covering all p features.
SelectionMetrics selection_metrics(const std::vector<Index>& selected, const std::vector<Index>& truth, Index p);

/// Outcome of one seeded run of the pipeline.
struct ReplicationRecord {
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;  // set when !ok
    SelectionMetrics metrics;
    double mse = std::numeric_limits<double>::quiet_NaN();  // held-out, when refit is evaluated
    Index k1_used = 0;
    Index s_used = 0;
    bool support_retained = true;  // support within the screened survivors
    std::vector<Index> selected;
    std::vector<Index> support;
    double runtime_ms = 0.0;
};

struct ReplicationSummary {
    std::vector<ReplicationRecord> records;  // ordered by seed
    Index successes = 0;
    Index failures = 0;
    double tpr_mean = 0.0, tpr_sd = 0.0;
    double fpr_mean = 0.0, fpr_sd = 0.0;
    double mse_mean = std::numeric_limits<double>::quiet_NaN();
    double mse_sd = std::numeric_limits<double>::quiet_NaN();
    double runtime_ms = 0.0;  // total over records
    std::string fingerprint;
};

/// Mean and population sd (divide by k) of the successful records.
ReplicationSummary summarize(std::vector<ReplicationRecord> records, std::string fingerprint = {});

using ReplicationRunner = std::function<ReplicationRecord(const SimSpec&, const PipelineConfig&)>;

/// simulate -> select -> metrics (-> refit and held-out MSE). Errors are
/// caught and recorded in the returned record.
ReplicationRecord run_replication(const SimSpec& spec, const PipelineConfig& cfg);

/// Runs `runner` once per seed (spec.seed replaced), up to `jobs` at a time.
/// Seeds must be distinct.
ReplicationSummary run_replications(const SimSpec& base, const PipelineConfig& cfg,
                                    const std::vector<std::uint64_t>& seeds, int jobs = 1,
                                    const ReplicationRunner& runner = run_replication);

/// Hex digest identifying a (spec without seed, pipeline config) pair.
std::string config_fingerprint(const SimSpec& base, const PipelineConfig& cfg);

}  // namespace steinselect
