#pragma once

#include "steinselect/dataset.hpp"

#include <optional>
#include <span>
#include <string>

namespace steinselect {

enum class CovarianceMethod { known, sample, ledoit_wolf };

std::string to_string(CovarianceMethod m);

/// Positive-definite covariance together with its inverse. The inverse always
/// comes from a Cholesky factorization of `sigma`.
struct CovarianceModel {
    MatrixXd sigma;
    MatrixXd sigma_inv;
    CovarianceMethod method = CovarianceMethod::known;
    double min_eig = 0.0;
    double shrinkage = 0.0;           // Ledoit-Wolf intensity; 0 otherwise
    bool centered_internally = false;  // input was not flagged centered

    Index p() const noexcept { return sigma.rows(); }
};

/// Wraps a user-supplied covariance. Throws DimensionError for non-square or
/// asymmetric input and RankError when it is not positive definite.
CovarianceModel known_covariance(const MatrixXd& sigma);

/// (1/n) X'X. Fails with RankError when the smallest eigenvalue is at or
/// below 1e-10 * trace(S)/p instead of regularizing.
CovarianceModel sample_covariance(const Dataset& d);

/// Ledoit-Wolf (2004) shrinkage towards mu I with mu = trace(S)/p:
///
///   d^2    = ||S - mu I||_F^2 / p
///   bbar^2 = (1/n^2) sum_i ||x_i x_i' - S||_F^2 / p
///   delta  = min(bbar^2, d^2) / d^2
///   Sigma  = (1 - delta) S + delta mu I
///
/// `shrinkage_override` in [0, 1] replaces the estimated delta.
CovarianceModel ledoit_wolf_covariance(const Dataset& d, std::optional<double> shrinkage_override = {});

/// Principal submatrix of a known covariance with its inverse recomputed
/// (the marginal covariance of the sub-vector, not a slice of Sigma^-1).
CovarianceModel known_submatrix(const CovarianceModel& full, std::span<const Index> subset);

}  // namespace steinselect
