#include "steinselect/tuning.hpp"

#include "steinselect/error.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <thread>

namespace steinselect {

std::string to_string(K1Rule rule) {
    return rule == K1Rule::ratio ? "ratio" : "ratio-minus-one";
}

K1Rule parse_k1_rule(const std::string& text) {
    if (text == "ratio-minus-one") return K1Rule::ratio_minus_one;
    if (text == "ratio") return K1Rule::ratio;
    throw ConfigError("k1 rule must be \"ratio-minus-one\" or \"ratio\", got \"" + text + "\"");
}

Index default_k_max(Index p) { return std::min<Index>(p - 2, 10); }

EigengapReport estimate_k1(const VectorXd& eigenvalues, Index k_max, double gamma_rel, K1Rule rule) {
    const Index p = eigenvalues.size();
    if (k_max < 2) throw ConfigError("k_max must be >= 2, got " + std::to_string(k_max));
    if (k_max > p - 2) {
        throw ConfigError("k_max must be <= p - 2 = " + std::to_string(p - 2) + ", got " + std::to_string(k_max));
    }
    if (!(gamma_rel > 0.0)) throw ConfigError("gamma_rel must be > 0");

    EigengapReport report;
    report.rule = rule;
    report.k_max = k_max;
    report.abs_eigenvalues = eigenvalues.cwiseAbs();
    std::sort(report.abs_eigenvalues.begin(), report.abs_eigenvalues.end(), std::greater<>());
    const VectorXd& lam = report.abs_eigenvalues;

    report.gaps.resize(p - 1);
    for (Index k = 0; k + 1 < p; ++k) report.gaps(k) = lam(k) - lam(k + 1);
    report.gamma_reg = gamma_rel * std::max(lam(0), 1.0);

    // 1-based k maps to lam(k - 1).
    report.ratios.resize(k_max - 1);
    Index best_k = 2;
    for (Index k = 2; k <= k_max; ++k) {
        const double r = report.gaps(k - 2) / (report.gaps(k - 1) + report.gamma_reg);
        report.ratios(k - 2) = r;
        if (r > report.ratios(best_k - 2)) best_k = k;
    }
    report.k1_hat = rule == K1Rule::ratio ? best_k : best_k - 1;
    return report;
}

EigengapReport estimate_k1(const SteinMoment& m, Index k_max, double gamma_rel, K1Rule rule) {
    return estimate_k1(m.eigenvalues, k_max, gamma_rel, rule);
}

Index estimate_k1_threshold(const VectorXd& eigenvalues, double tau) {
    if (!(tau > 0.0)) throw ConfigError("tau must be > 0");
    VectorXd lam = eigenvalues.cwiseAbs();
    std::sort(lam.begin(), lam.end(), std::greater<>());
    for (Index j = lam.size() - 1; j >= 1; --j) {
        if (lam(j - 1) - lam(j) > tau) return j;
    }
    throw NoGapError("no eigengap exceeds tau=" + format_double(tau));
}

Index estimate_k1_threshold(const SteinMoment& m, double tau) {
    return estimate_k1_threshold(m.eigenvalues, tau);
}

double bic_value(Index n, double mse, Index s, double lambda_per_feature) {
    const auto nn = static_cast<double>(n);
    return nn * std::log(mse) + lambda_per_feature * static_cast<double>(s) * std::log(nn);
}

BicReport bic_from_mse(Index n, const std::vector<std::pair<Index, double>>& mse_by_s, double lambda_per_feature) {
    if (mse_by_s.empty()) throw ConfigError("BIC needs at least one candidate s");
    if (n < 1) throw ConfigError("BIC needs n >= 1");
    BicReport report;
    report.n = n;
    report.lambda_per_feature = lambda_per_feature;
    report.lambda_rule = "lambda_s = " + format_double(lambda_per_feature) + " * s";
    for (const auto& [s, mse] : mse_by_s) {
        if (!(mse > 0.0) || !std::isfinite(mse)) {
            throw NumericalError("BIC needs a positive finite MSE, got " + format_double(mse) +
                                 " at s=" + std::to_string(s));
        }
        report.candidates.push_back({s, mse, bic_value(n, mse, s, lambda_per_feature)});
    }
    const BicCandidate* best = &report.candidates.front();
    for (const auto& c : report.candidates) {
        if (c.bic < best->bic || (c.bic == best->bic && c.s < best->s)) best = &c;
    }
    report.s_hat = best->s;
    return report;
}

BicReport estimate_s_bic(const Dataset& d, const VectorXd& ranking, const std::vector<Index>& s_grid,
                         const RefitConfig& refit_cfg, double lambda_per_feature, int jobs) {
    if (s_grid.empty()) throw ConfigError("s grid must not be empty");
    if (ranking.size() != d.p()) {
        throw DimensionError("ranking has length " + std::to_string(ranking.size()) + ", expected p=" +
                             std::to_string(d.p()));
    }
    for (Index s : s_grid) {
        if (s < 1 || s > d.p()) throw ConfigError("grid value s=" + std::to_string(s) + " outside [1, p]");
    }
    refit_cfg.validate();

    std::vector<std::pair<Index, double>> mse(s_grid.size());
    std::vector<std::exception_ptr> failures(s_grid.size());
    auto run = [&](std::size_t g) {
        const Index s = s_grid[g];
        try {
            const RefitModel model = train(d, top_indices(ranking, s), refit_cfg);
            mse[g] = {s, model.final_train_mse};
        } catch (const Error& e) {
            failures[g] = std::make_exception_ptr(NumericalError("refit failed at s=" + std::to_string(s) + ": " + e.what()));
        }
    };
    const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(s_grid.size())));
    if (workers == 1) {
        for (std::size_t g = 0; g < s_grid.size(); ++g) run(g);
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                for (std::size_t g = static_cast<std::size_t>(w); g < s_grid.size(); g += static_cast<std::size_t>(workers)) run(g);
            });
        }
        for (auto& t : pool) t.join();
    }
    for (const auto& f : failures) {
        if (f) std::rethrow_exception(f);
    }
    return bic_from_mse(d.n(), mse, lambda_per_feature);
}

}  // namespace steinselect
