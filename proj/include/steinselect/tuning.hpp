#pragma once

#include "steinselect/refit.hpp"
#include "steinselect/stein.hpp"

#include <string>
#include <vector>

namespace steinselect {

/// Which index the eigengap ratio reports. The ratio
///   r(k) = (|l_{k-1}| - |l_k|) / (|l_k| - |l_{k+1}| + gamma)
/// peaks one past the last signal eigenvalue, so ratio_minus_one returns
/// argmax r - 1; ratio returns argmax r itself.
enum class K1Rule { ratio_minus_one, ratio };

std::string to_string(K1Rule rule);
K1Rule parse_k1_rule(const std::string& text);

struct EigengapReport {
    VectorXd abs_eigenvalues;  // descending
    VectorXd gaps;             // gaps(k-1) = |l_k| - |l_{k+1}|, k = 1..p-1
    VectorXd ratios;           // ratios(k-2) = r(k), k = 2..k_max
    Index k_max = 0;
    Index k1_hat = 0;
    double gamma_reg = 0.0;
    K1Rule rule = K1Rule::ratio_minus_one;
};

/// Default search bound for estimate_k1: min(p - 2, 10).
Index default_k_max(Index p);

EigengapReport estimate_k1(const VectorXd& eigenvalues, Index k_max, double gamma_rel = 1e-8,
                           K1Rule rule = K1Rule::ratio_minus_one);
EigengapReport estimate_k1(const SteinMoment& m, Index k_max, double gamma_rel = 1e-8,
                           K1Rule rule = K1Rule::ratio_minus_one);

/// Largest j with |l_j| - |l_{j+1}| > tau; NoGapError when none qualifies.
Index estimate_k1_threshold(const VectorXd& eigenvalues, double tau);
Index estimate_k1_threshold(const SteinMoment& m, double tau);

struct BicCandidate {
    Index s = 0;
    double train_mse = 0.0;
    double bic = 0.0;
};

struct BicReport {
    std::vector<BicCandidate> candidates;
    Index s_hat = 0;
    Index n = 0;
    double lambda_per_feature = 100.0;
    std::string lambda_rule;
};

/// n ln(mse) + lambda_per_feature * s * ln(n).
double bic_value(Index n, double mse, Index s, double lambda_per_feature = 100.0);

/// Scores each (s, mse) pair; s_hat is the minimiser, ties to the smaller s.
BicReport bic_from_mse(Index n, const std::vector<std::pair<Index, double>>& mse_by_s,
                       double lambda_per_feature = 100.0);

/// For each s in `s_grid`: refit on the top-s features of `ranking` (ties to
/// the lower index) with `refit_cfg` and its fixed seed, take the training MSE.
BicReport estimate_s_bic(const Dataset& d, const VectorXd& ranking, const std::vector<Index>& s_grid,
                         const RefitConfig& refit_cfg, double lambda_per_feature = 100.0, int jobs = 1);

}  // namespace steinselect
