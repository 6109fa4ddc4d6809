#include "steinselect/screening.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace steinselect {

namespace {

std::vector<Index> iota_indices(Index p) {
    std::vector<Index> all(static_cast<std::size_t>(p));
    std::iota(all.begin(), all.end(), Index{0});
    return all;
}

Index keep_count(Index size, double zeta) {
    return static_cast<Index>(std::floor(zeta * static_cast<double>(size)));
}

Index required_features(Index k1, const SelectionRule& rule) {
    Index need = std::max<Index>(1, k1);
    if (const auto* top = std::get_if<TopSRule>(&rule)) need = std::max(need, top->s);
    return need;
}

}  // namespace

CovarianceModel covariance_for(const CovarianceSource& source, const Dataset& sub, std::span<const Index> subset) {
    switch (source.kind) {
    case CovarianceSource::Kind::known: {
        if (!source.known) throw ConfigError("known covariance source without a covariance");
        const bool whole = static_cast<Index>(subset.size()) == source.known->p() &&
                           std::equal(subset.begin(), subset.end(), iota_indices(source.known->p()).begin());
        return whole ? *source.known : known_submatrix(*source.known, subset);
    }
    case CovarianceSource::Kind::sample:
        return sample_covariance(sub);
    case CovarianceSource::Kind::ledoit_wolf:
        return ledoit_wolf_covariance(sub);
    case CovarianceSource::Kind::automatic:
        return 2 * sub.p() > sub.n() ? ledoit_wolf_covariance(sub) : sample_covariance(sub);
    }
    throw ConfigError("unknown covariance source");
}

ScreeningConfig ScreeningConfig::resolved(Index n) const {
    ScreeningConfig out = *this;
    if (auto_defaults) {
        const double root = std::cbrt(static_cast<double>(n));
        out.zeta = std::min(0.9, c1 / root);
        out.p0 = static_cast<Index>(std::ceil(c2 * root));
        out.auto_defaults = false;
    }
    return out;
}

void ScreeningConfig::validate() const {
    if (auto_defaults) {
        if (!(c1 > 0.0) || !(c2 > 0.0)) throw ConfigError("screening constants c1, c2 must be > 0");
    } else {
        if (!(zeta > 0.0 && zeta < 1.0)) throw ConfigError("zeta must lie in (0, 1)");
        if (p0 < 1) throw ConfigError("p0 must be >= 1");
    }
    if (max_rounds < 1) throw ConfigError("max_rounds must be >= 1");
}

std::vector<Index> screen_once(const Dataset& d, std::span<const Index> subset, const CovarianceSource& source,
                               double zeta, VectorXd* diagonal_out, const MomentOptions& opt) {
    const auto size = static_cast<Index>(subset.size());
    if (size < 2) throw ConfigError("screening needs at least 2 features");
    const Index keep = keep_count(size, zeta);
    if (keep < 1) {
        throw ConfigError("screening would keep 0 features (floor(" + format_double(zeta) + " * " +
                          std::to_string(size) + ") = 0)");
    }
    const Dataset sub = d.select_columns(subset);
    const CovarianceModel cov = covariance_for(source, sub, subset);
    const VectorXd magnitude = stein_moment_diagonal(sub, cov, opt).cwiseAbs();
    if (diagonal_out) *diagonal_out = magnitude;

    // Subset is sorted, so positional ties resolve to the lower original index.
    std::vector<Index> kept;
    for (Index local : top_indices(magnitude, keep)) kept.push_back(subset[static_cast<std::size_t>(local)]);
    return kept;
}

ScreeningTrace screen(const Dataset& d, const ScreeningConfig& cfg, const CovarianceSource& source,
                      Index min_keep, const MomentOptions& opt) {
    cfg.validate();
    const ScreeningConfig eff = cfg.resolved(d.n());
    eff.validate();

    ScreeningTrace trace;
    trace.zeta = eff.zeta;
    trace.p0 = eff.p0;
    trace.initial = iota_indices(d.p());
    std::vector<Index> current = trace.initial;

    while (static_cast<Index>(current.size()) > eff.p0) {
        const auto size = static_cast<Index>(current.size());
        const Index keep = std::max(keep_count(size, eff.zeta), min_keep);
        if (keep >= size) break;
        if (static_cast<int>(trace.rounds.size()) >= eff.max_rounds) {
            trace.final_indices = current;
            throw IterationLimitError("screening hit max_rounds=" + std::to_string(eff.max_rounds) + " with " +
                                          std::to_string(size) + " features left (p0=" +
                                          std::to_string(eff.p0) + ")",
                                      std::move(trace));
        }
        ScreeningRound round;
        if (keep == keep_count(size, eff.zeta)) {
            round.kept = screen_once(d, current, source, eff.zeta, &round.diagonal, opt);
        } else {
            // min_keep floor: rank the same way, keep more.
            const Dataset sub = d.select_columns(current);
            const CovarianceModel cov = covariance_for(source, sub, current);
            round.diagonal = stein_moment_diagonal(sub, cov, opt).cwiseAbs();
            for (Index local : top_indices(round.diagonal, keep)) {
                round.kept.push_back(current[static_cast<std::size_t>(local)]);
            }
        }
        current = round.kept;
        trace.rounds.push_back(std::move(round));
    }
    trace.final_indices = current;
    return trace;
}

SteinMoment moment_on_subset(const Dataset& d, std::span<const Index> subset, const CovarianceSource& source,
                             const MomentOptions& opt) {
    const Dataset sub = d.select_columns(subset);
    return stein_moment(sub, covariance_for(source, sub, subset), opt);
}

SelectionResult lift_selection(const SelectionResult& on_subset, std::span<const Index> subset, Index p) {
    SelectionResult out;
    out.k1_used = on_subset.k1_used;
    out.rule = on_subset.rule;
    out.empty_selection = on_subset.empty_selection;
    out.column_scores = VectorXd::Zero(p);
    out.w_hat = MatrixXd::Zero(on_subset.w_hat.rows(), p);
    for (std::size_t local = 0; local < subset.size(); ++local) {
        const Index j = subset[local];
        out.column_scores(j) = on_subset.column_scores(static_cast<Index>(local));
        out.w_hat.col(j) = on_subset.w_hat.col(static_cast<Index>(local));
    }
    for (Index local : on_subset.selected) out.selected.push_back(subset[static_cast<std::size_t>(local)]);
    std::sort(out.selected.begin(), out.selected.end());
    return out;
}

ScreenedSelection screen_and_select(const Dataset& d, const ScreeningConfig& cfg, Index k1,
                                    const SelectionRule& rule, const CovarianceSource& source,
                                    const MomentOptions& opt) {
    if (k1 < 1) throw ConfigError("k1 must be >= 1");
    const ScreeningConfig eff = cfg.resolved(d.n());
    if (k1 > eff.p0 && d.p() > eff.p0) {
        throw ConfigError("k1=" + std::to_string(k1) + " exceeds the screening target p0=" + std::to_string(eff.p0));
    }
    ScreenedSelection out;
    out.trace = screen(d, cfg, source, required_features(k1, rule), opt);
    out.final_moment = moment_on_subset(d, out.trace.final_indices, source, opt);
    const SelectionResult local = select(out.final_moment, k1, rule);
    out.selection = lift_selection(local, out.trace.final_indices, d.p());
    return out;
}

std::vector<Index> screening_schedule(Index p, double zeta, Index p0, Index min_keep) {
    std::vector<Index> sizes{p};
    Index size = p;
    while (size > p0) {
        const Index keep = std::max(keep_count(size, zeta), min_keep);
        if (keep >= size || keep < 1) break;
        size = keep;
        sizes.push_back(size);
    }
    return sizes;
}

}  // namespace steinselect
