#pragma once

#include "steinselect/covariance.hpp"

#include <string>
#include <variant>
#include <vector>

namespace steinselect {

/// Empirical moment (1/n) sum_i y_i T(x_i) and its eigensystem, ordered by
/// descending |lambda|. Equal magnitudes order by signed value (larger first)
/// and then by the solver's ascending position.
struct SteinMoment {
    MatrixXd a_hat;
    VectorXd eigenvalues;
    MatrixXd eigenvectors;  // row i pairs with eigenvalues(i)
    Index n_used = 0;

    Index p() const noexcept { return a_hat.rows(); }
};

/// Controls the blocked accumulation. Samples are cut into fixed blocks whose
/// partial sums are combined pairwise, so the result does not depend on
/// `threads`.
struct MomentOptions {
    Index block_size = 512;
    int threads = 1;
};

/// Symmetrizes `a_hat` and attaches its ordered eigensystem.
SteinMoment make_moment(MatrixXd a_hat, Index n_used);

SteinMoment stein_moment(const Dataset& d, const CovarianceModel& cov, const MomentOptions& opt = {});

/// diag(A-hat) only, O(n p) after forming X Sigma^-1.
VectorXd stein_moment_diagonal(const Dataset& d, const CovarianceModel& cov, const MomentOptions& opt = {});

struct ThresholdRule {
    double kappa = 0.0;
};
struct TopSRule {
    Index s = 0;
};
using SelectionRule = std::variant<ThresholdRule, TopSRule>;

std::string describe(const SelectionRule& rule);

struct SelectionResult {
    std::vector<Index> selected;  // sorted
    VectorXd column_scores;       // ||column j of w_hat||_2
    Index k1_used = 0;
    SelectionRule rule;
    MatrixXd w_hat;               // k1 x p
    bool empty_selection = false; // threshold rule kept nothing
};

/// Leading k1 eigenvectors as rows, each flipped so its largest-magnitude
/// entry (first one on ties) is nonnegative.
MatrixXd top_k_rows(const SteinMoment& m, Index k1);

SelectionResult select(const SteinMoment& m, Index k1, const SelectionRule& rule);

/// The rule applied to precomputed column scores: scores >= kappa, or the top
/// s (ties to the lower index). Sorted.
std::vector<Index> apply_rule(const VectorXd& column_scores, const SelectionRule& rule);

/// Indices of the `count` largest values, ties to the lower index; sorted.
std::vector<Index> top_indices(const VectorXd& values, Index count);

}  // namespace steinselect
