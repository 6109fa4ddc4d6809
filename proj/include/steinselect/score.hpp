#pragma once

#include "steinselect/covariance.hpp"

namespace steinselect {

/// Second-order score of a centered Gaussian evaluated at one sample.
struct ScoreMatrix {
    MatrixXd t;
};

/// T(x) = S^-1 x x' S^-1 - S^-1, built as v v' - S^-1 with v = S^-1 x so the
/// result is symmetric bit for bit.
ScoreMatrix second_order_score(const VectorXd& x, const CovarianceModel& cov);

}  // namespace steinselect
