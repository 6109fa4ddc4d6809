#pragma once

#include "steinselect/error.hpp"
#include "steinselect/stein.hpp"

#include <optional>
#include <vector>

namespace steinselect {

/// How a covariance is obtained for a (sub)set of features.
struct CovarianceSource {
    enum class Kind { known, sample, ledoit_wolf, automatic };
    Kind kind = Kind::automatic;
    std::optional<CovarianceModel> known;  // full-dimension model, Kind::known only

    static CovarianceSource sample() { return {Kind::sample, {}}; }
    static CovarianceSource ledoit_wolf() { return {Kind::ledoit_wolf, {}}; }
    /// Ledoit-Wolf while the feature count exceeds n/2, sample otherwise.
    static CovarianceSource automatic() { return {Kind::automatic, {}}; }
    static CovarianceSource from_known(CovarianceModel full) { return {Kind::known, std::move(full)}; }
};

/// Covariance for `subset` of the columns of `full`. `sub` is the matching
/// column subset of the dataset.
CovarianceModel covariance_for(const CovarianceSource& source, const Dataset& sub,
                               std::span<const Index> subset);

struct ScreeningConfig {
    double zeta = 0.5;
    Index p0 = 100;
    bool auto_defaults = false;  // zeta = min(0.9, c1 n^{-1/3}), p0 = ceil(c2 n^{1/3})
    double c1 = 2.0;
    double c2 = 2.0;
    int max_rounds = 64;

    /// Effective (zeta, p0) after applying auto defaults for sample size n.
    ScreeningConfig resolved(Index n) const;
    void validate() const;
};

struct ScreeningRound {
    std::vector<Index> kept;   // original indices, sorted
    VectorXd diagonal;         // |A_kk| of the set that was ranked, in its order
};

struct ScreeningTrace {
    std::vector<Index> initial;  // the set ranked in round 1
    std::vector<ScreeningRound> rounds;
    std::vector<Index> final_indices;
    double zeta = 0.0;
    Index p0 = 0;
};

/// One ranking step on `subset` (original indices, sorted): keep the
/// floor(zeta |I|) coordinates with the largest |A_kk|, ties to the lower
/// original index. `diagonal_out`, when given, receives |A_kk| for the subset.
std::vector<Index> screen_once(const Dataset& d, std::span<const Index> subset, const CovarianceSource& source,
                               double zeta, VectorXd* diagonal_out = nullptr,
                               const MomentOptions& opt = {});

/// Raised when max_rounds passes before the set shrinks to p0.
class IterationLimitError : public Error {
public:
    IterationLimitError(const std::string& what, ScreeningTrace trace)
        : Error(what), trace_(std::move(trace)) {}
    const ScreeningTrace& trace() const noexcept { return trace_; }

private:
    ScreeningTrace trace_;
};

struct ScreenedSelection {
    SelectionResult selection;  // indices and scores in the original space
    ScreeningTrace trace;
    SteinMoment final_moment;   // moment on trace.final_indices
};

/// Iterates screen_once until at most p0 features remain. A round never keeps
/// fewer than `min_keep` features; when that floor would stop the set from
/// shrinking, screening ends early.
ScreeningTrace screen(const Dataset& d, const ScreeningConfig& cfg, const CovarianceSource& source,
                      Index min_keep = 1, const MomentOptions& opt = {});

/// Stein moment on the given original-index subset, covariance re-estimated there.
SteinMoment moment_on_subset(const Dataset& d, std::span<const Index> subset, const CovarianceSource& source,
                             const MomentOptions& opt = {});

/// Maps a selection made on `subset` back to the original p columns;
/// screened-out features get a zero column in w_hat and a zero score.
SelectionResult lift_selection(const SelectionResult& on_subset, std::span<const Index> subset, Index p);

/// screen() followed by select() on the survivors, covariance re-estimated on
/// them. Throws IterationLimitError (carrying the trace) after max_rounds.
ScreenedSelection screen_and_select(const Dataset& d, const ScreeningConfig& cfg, Index k1,
                                    const SelectionRule& rule, const CovarianceSource& source,
                                    const MomentOptions& opt = {});

/// Set sizes visited by screening: p, then floor(zeta * size) (at least
/// min_keep) while size > p0 and the set still shrinks.
std::vector<Index> screening_schedule(Index p, double zeta, Index p0, Index min_keep = 1);

}  // namespace steinselect
