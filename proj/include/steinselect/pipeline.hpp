#pragma once

#include "steinselect/refit.hpp"
#include "steinselect/screening.hpp"
#include "steinselect/tuning.hpp"

#include <optional>
#include <string>
#include <vector>

namespace steinselect {

enum class Method { plain, screened };

std::string to_string(Method m);
Method parse_method(const std::string& text);

std::string to_string(CovarianceSource::Kind k);
CovarianceSource::Kind parse_covariance_kind(const std::string& text);

/// Everything needed to go from a dataset to a selection.
struct PipelineConfig {
    Method method = Method::plain;
    CovarianceSource::Kind covariance = CovarianceSource::Kind::sample;

    std::optional<Index> k1;      // unset: eigengap ratio estimate
    std::optional<Index> k_max;   // unset: default_k_max(p)
    double gamma_rel = 1e-8;
    K1Rule k1_rule = K1Rule::ratio_minus_one;

    std::optional<double> kappa;  // threshold rule when set
    std::optional<Index> s;       // top-s rule; neither set: s by BIC
    std::vector<Index> s_grid{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    double bic_lambda = 100.0;

    ScreeningConfig screening{.auto_defaults = true};
    RefitConfig refit;  // BIC grid training and optional held-out evaluation
    bool evaluate_refit = false;
    Index n_test = 2000;

    MomentOptions moment;
    int jobs = 1;  // BIC grid parallelism

    void validate() const;
    /// Canonical one-line description, used for fingerprints.
    std::string describe() const;
};

struct PipelineOutput {
    SelectionResult selection;  // original feature space
    SteinMoment moment;         // on the surviving features
    std::vector<Index> moment_indices;
    std::optional<ScreeningTrace> trace;
    std::optional<EigengapReport> k1_report;
    std::optional<BicReport> bic_report;
    CovarianceMethod covariance_method = CovarianceMethod::sample;
};

/// Centers (if needed), estimates the covariance, optionally screens, resolves
/// k1 and the selection rule, and selects. `known` is required for the known
/// covariance kind and must match d.p().
PipelineOutput run_selection(const Dataset& d, const PipelineConfig& cfg,
                             const std::optional<CovarianceModel>& known = {});

}  // namespace steinselect
