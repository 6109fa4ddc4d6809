#include "steinselect/score.hpp"

#include "steinselect/error.hpp"

namespace steinselect {

ScoreMatrix second_order_score(const VectorXd& x, const CovarianceModel& cov) {
    if (x.size() != cov.p()) {
        throw DimensionError("score input has length " + std::to_string(x.size()) + ", covariance is " +
                             std::to_string(cov.p()) + "x" + std::to_string(cov.p()));
    }
    const VectorXd v = cov.sigma_inv * x;
    return {v * v.transpose() - cov.sigma_inv};
}

}  // namespace steinselect
