#include "steinselect/pipeline.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace steinselect {

std::string to_string(Method m) { return m == Method::screened ? "screened" : "plain"; }

Method parse_method(const std::string& text) {
    if (text == "plain") return Method::plain;
    if (text == "screened") return Method::screened;
    throw ConfigError("method must be \"plain\" or \"screened\", got \"" + text + "\"");
}

std::string to_string(CovarianceSource::Kind k) {
    switch (k) {
    case CovarianceSource::Kind::known: return "known";
    case CovarianceSource::Kind::sample: return "sample";
    case CovarianceSource::Kind::ledoit_wolf: return "ledoit-wolf";
    case CovarianceSource::Kind::automatic: return "auto";
    }
    return "?";
}

CovarianceSource::Kind parse_covariance_kind(const std::string& text) {
    if (text == "known") return CovarianceSource::Kind::known;
    if (text == "sample") return CovarianceSource::Kind::sample;
    if (text == "ledoit-wolf" || text == "ledoit_wolf") return CovarianceSource::Kind::ledoit_wolf;
    if (text == "auto") return CovarianceSource::Kind::automatic;
    throw ConfigError("covariance must be one of known, sample, ledoit-wolf, auto; got \"" + text + "\"");
}

void PipelineConfig::validate() const {
    if (k1 && *k1 < 1) throw ConfigError("k1 must be ≥ 1");
    if (k_max && *k_max < 2) throw ConfigError("k_max must be >= 2");
    if (!(gamma_rel > 0.0)) throw ConfigError("gamma_rel must be > 0");
    if (kappa && s) throw ConfigError("give either kappa or s, not both");
    if (kappa && !(*kappa > 0.0)) throw ConfigError("kappa must be > 0");
    if (s && *s < 1) throw ConfigError("s must be ≥ 1");
    if (!kappa && !s) {
        if (s_grid.empty()) throw ConfigError("s grid must not be empty");
        for (Index v : s_grid) {
            if (v < 1) throw ConfigError("s grid values must be >= 1");
        }
        refit.validate();
    }
    if (evaluate_refit) {
        refit.validate();
        if (n_test < 1) throw ConfigError("n_test must be >= 1");
    }
    if (method == Method::screened) screening.validate();
    if (moment.block_size < 1) throw ConfigError("block_size must be >= 1");
}

std::string PipelineConfig::describe() const {
    std::ostringstream out;
    out << "method=" << to_string(method) << ";cov=" << to_string(covariance);
    out << ";k1=" << (k1 ? std::to_string(*k1) : "auto:" + to_string(k1_rule));
    if (k_max) out << ";k_max=" << *k_max;
    out << ";gamma_rel=" << format_double(gamma_rel);
    if (kappa) {
        out << ";kappa=" << format_double(*kappa);
    } else if (s) {
        out << ";s=" << *s;
    } else {
        out << ";s=bic:";
        for (Index v : s_grid) out << v << ',';
        out << "lambda=" << format_double(bic_lambda);
    }
    if (method == Method::screened) {
        if (screening.auto_defaults) {
            out << ";screen=auto(" << format_double(screening.c1) << ',' << format_double(screening.c2) << ')';
        } else {
            out << ";screen=(" << format_double(screening.zeta) << ',' << screening.p0 << ')';
        }
        out << ";max_rounds=" << screening.max_rounds;
    }
    if (evaluate_refit || (!kappa && !s)) {
        out << ";refit=";
        for (Index w : refit.hidden) out << w << ',';
        out << refit.epochs << ',' << refit.batch_size << ',' << format_double(refit.learning_rate) << ','
            << to_string(refit.optimizer) << ',' << refit.standardize_inputs;
    }
    if (evaluate_refit) out << ";n_test=" << n_test;
    return out.str();
}

PipelineOutput run_selection(const Dataset& d, const PipelineConfig& cfg, const std::optional<CovarianceModel>& known) {
    cfg.validate();
    const Dataset dc = center_response(d.centered() ? d : center_columns(d));

    CovarianceSource source{cfg.covariance, {}};
    if (cfg.covariance == CovarianceSource::Kind::known) {
        if (!known) throw ConfigError("known covariance requested but none supplied");
        if (known->p() != d.p()) {
            throw DimensionError("known covariance is " + std::to_string(known->p()) + "x" +
                                 std::to_string(known->p()) + " but the data has p=" + std::to_string(d.p()));
        }
        source.known = known;
    }

    PipelineOutput out;
    if (cfg.method == Method::screened) {
        Index min_keep = std::max<Index>(1, cfg.k1.value_or(1));
        if (cfg.s) min_keep = std::max(min_keep, *cfg.s);
        const ScreeningConfig eff = cfg.screening.resolved(dc.n());
        if (cfg.k1 && *cfg.k1 > eff.p0 && dc.p() > eff.p0) {
            throw ConfigError("k1=" + std::to_string(*cfg.k1) + " exceeds the screening target p0=" +
                              std::to_string(eff.p0));
        }
        out.trace = screen(dc, cfg.screening, source, min_keep, cfg.moment);
        out.moment_indices = out.trace->final_indices;
    } else {
        out.moment_indices.resize(static_cast<std::size_t>(dc.p()));
        std::iota(out.moment_indices.begin(), out.moment_indices.end(), Index{0});
    }
    const Dataset sub = dc.select_columns(out.moment_indices);
    const CovarianceModel cov = covariance_for(source, sub, out.moment_indices);
    out.covariance_method = cov.method;
    out.moment = stein_moment(sub, cov, cfg.moment);
    const Index q = out.moment.p();

    Index k1 = 0;
    if (cfg.k1) {
        k1 = *cfg.k1;
    } else {
        const Index k_max = cfg.k_max.value_or(default_k_max(q));
        if (q < 4) throw ConfigError("automatic k1 needs at least 4 features, have " + std::to_string(q));
        out.k1_report = estimate_k1(out.moment, k_max, cfg.gamma_rel, cfg.k1_rule);
        k1 = out.k1_report->k1_hat;
    }

    SelectionRule rule;
    if (cfg.kappa) {
        rule = ThresholdRule{*cfg.kappa};
    } else if (cfg.s) {
        rule = TopSRule{*cfg.s};
    } else {
        const SelectionResult ranked = lift_selection(select(out.moment, k1, TopSRule{1}), out.moment_indices, dc.p());
        std::vector<Index> grid;
        for (Index v : cfg.s_grid) {
            if (v <= q) grid.push_back(v);
        }
        if (grid.empty()) throw ConfigError("no s grid value fits the " + std::to_string(q) + " available features");
        out.bic_report = estimate_s_bic(dc, ranked.column_scores, grid, cfg.refit, cfg.bic_lambda, cfg.jobs);
        rule = TopSRule{out.bic_report->s_hat};
    }

    out.selection = lift_selection(select(out.moment, k1, rule), out.moment_indices, dc.p());
    return out;
}

}  // namespace steinselect
