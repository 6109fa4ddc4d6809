#pragma once

#include "steinselect/metrics.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace steinselect {

using Json = nlohmann::json;

/// {selected, selected_indices, scores, k1, rule, eigenvalues (first 2 k1), warning}
Json selection_to_json(const SelectionResult& r, const SteinMoment& m, const std::vector<std::string>& ids);

/// Selected feature ids of a selection document.
std::vector<std::string> selected_ids_from_json(const Json& j);

Json trace_to_json(const ScreeningTrace& t, const std::vector<std::string>& ids);

Json spec_to_json(const SimSpec& spec);
Json truth_to_json(const GroundTruth& truth, const SimSpec& spec, const std::vector<std::string>& ids);

Json eigengap_to_json(const EigengapReport& r);
Json bic_to_json(const BicReport& r);

/// Two-column plot data: "k,ratio" rows and "s,bic" rows.
std::string eigengap_to_csv(const EigengapReport& r);
std::string bic_to_csv(const BicReport& r);

Json refit_config_to_json(const RefitConfig& cfg);
RefitConfig refit_config_from_json(const Json& j);

/// Architecture, weights, standardization and feature ids; lossless.
Json model_to_json(const RefitModel& m, const RefitConfig& cfg);
RefitModel model_from_json(const Json& j);

/// Canonical JSON text: two-space indent, trailing newline.
std::string dump(const Json& j);

}  // namespace steinselect
