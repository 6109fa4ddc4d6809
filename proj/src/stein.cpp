#include "steinselect/stein.hpp"

#include "steinselect/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

namespace steinselect {

namespace {

// Fixed-block partial sums reduced pairwise: (b0+b1)+(b2+b3)+... The block
// layout depends only on n, so any thread count gives the same bits.
template <typename T, typename BlockFn>
T blocked_tree_sum(Index n, const MomentOptions& opt, BlockFn&& block_fn) {
    const Index block = std::max<Index>(1, opt.block_size);
    const Index count = (n + block - 1) / block;
    std::vector<T> partial(static_cast<std::size_t>(count));

    auto run = [&](Index b) {
        const Index start = b * block;
        partial[static_cast<std::size_t>(b)] = block_fn(start, std::min(block, n - start));
    };
    const int threads = std::max(1, std::min<int>(opt.threads, static_cast<int>(count)));
    if (threads == 1) {
        for (Index b = 0; b < count; ++b) run(b);
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) {
            pool.emplace_back([&, t] {
                for (Index b = t; b < count; b += threads) run(b);
            });
        }
        for (auto& th : pool) th.join();
    }

    for (std::size_t width = 1; width < partial.size(); width *= 2) {
        for (std::size_t i = 0; i + width < partial.size(); i += 2 * width) partial[i] += partial[i + width];
    }
    return std::move(partial.front());
}

void check_inputs(const Dataset& d, const CovarianceModel& cov) {
    if (d.n() < 1) throw ValidationError("Stein moment needs n >= 1");
    if (!d.centered()) throw ValidationError("Stein moment needs a centered dataset (see center_columns)");
    if (cov.p() != d.p()) {
        throw DimensionError("covariance is " + std::to_string(cov.p()) + "x" + std::to_string(cov.p()) +
                             " but the dataset has p=" + std::to_string(d.p()));
    }
}

}  // namespace

SteinMoment make_moment(MatrixXd a_hat, Index n_used) {
    if (a_hat.rows() != a_hat.cols()) throw DimensionError("moment matrix must be square");
    SteinMoment m;
    m.a_hat = 0.5 * (a_hat + a_hat.transpose());
    m.n_used = n_used;

    Eigen::SelfAdjointEigenSolver<MatrixXd> es(m.a_hat);
    if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition did not converge");
    const VectorXd& values = es.eigenvalues();
    const Index p = values.size();

    std::vector<Index> order(static_cast<std::size_t>(p));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
        const double ma = std::abs(values(a));
        const double mb = std::abs(values(b));
        if (ma != mb) return ma > mb;
        if (values(a) != values(b)) return values(a) > values(b);
        return a < b;
    });

    m.eigenvalues.resize(p);
    m.eigenvectors.resize(p, p);
    for (Index i = 0; i < p; ++i) {
        const Index src = order[static_cast<std::size_t>(i)];
        m.eigenvalues(i) = values(src);
        m.eigenvectors.row(i) = es.eigenvectors().col(src).transpose();
    }
    return m;
}

SteinMoment stein_moment(const Dataset& d, const CovarianceModel& cov, const MomentOptions& opt) {
    check_inputs(d, cov);
    const MatrixXd& x = d.x();
    const VectorXd& y = d.y();
    const MatrixXd& prec = cov.sigma_inv;

    // sum_i y_i v_i v_i' with v_i = Sigma^-1 x_i, block by block.
    MatrixXd outer = blocked_tree_sum<MatrixXd>(d.n(), opt, [&](Index start, Index len) {
        const MatrixXd v = x.middleRows(start, len) * prec;
        const MatrixXd weighted = y.segment(start, len).asDiagonal() * v;
        MatrixXd g = weighted.transpose() * v;
        return g;
    });
    const double n = static_cast<double>(d.n());
    const double y_sum = blocked_tree_sum<double>(d.n(), opt, [&](Index start, Index len) {
        return y.segment(start, len).sum();
    });
    MatrixXd a_hat = outer / n - (y_sum / n) * prec;
    return make_moment(std::move(a_hat), d.n());
}

VectorXd stein_moment_diagonal(const Dataset& d, const CovarianceModel& cov, const MomentOptions& opt) {
    check_inputs(d, cov);
    const MatrixXd& x = d.x();
    const VectorXd& y = d.y();
    const MatrixXd& prec = cov.sigma_inv;

    VectorXd diag_sum = blocked_tree_sum<VectorXd>(d.n(), opt, [&](Index start, Index len) {
        const MatrixXd v = x.middleRows(start, len) * prec;
        VectorXd acc = v.array().square().matrix().transpose() * y.segment(start, len);
        return acc;
    });
    const double n = static_cast<double>(d.n());
    const double y_sum = blocked_tree_sum<double>(d.n(), opt, [&](Index start, Index len) {
        return y.segment(start, len).sum();
    });
    return diag_sum / n - (y_sum / n) * prec.diagonal();
}

std::string describe(const SelectionRule& rule) {
    if (const auto* t = std::get_if<ThresholdRule>(&rule)) return "threshold(" + format_double(t->kappa) + ")";
    return "top_s(" + std::to_string(std::get<TopSRule>(rule).s) + ")";
}

MatrixXd top_k_rows(const SteinMoment& m, Index k1) {
    if (k1 < 1 || k1 > m.p()) {
        throw ConfigError("k1 must lie in [1, " + std::to_string(m.p()) + "], got " + std::to_string(k1));
    }
    MatrixXd rows = m.eigenvectors.topRows(k1);
    for (Index r = 0; r < k1; ++r) {
        Index arg = 0;
        double best = -1.0;
        for (Index j = 0; j < rows.cols(); ++j) {
            if (std::abs(rows(r, j)) > best) {
                best = std::abs(rows(r, j));
                arg = j;
            }
        }
        if (rows(r, arg) < 0.0) rows.row(r) *= -1.0;
    }
    return rows;
}

std::vector<Index> top_indices(const VectorXd& values, Index count) {
    std::vector<Index> order(static_cast<std::size_t>(values.size()));
    std::iota(order.begin(), order.end(), Index{0});
    const auto keep = static_cast<std::size_t>(std::clamp<Index>(count, 0, values.size()));
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep), order.end(),
                      [&](Index a, Index b) {
                          if (values(a) != values(b)) return values(a) > values(b);
                          return a < b;
                      });
    order.resize(keep);
    std::sort(order.begin(), order.end());
    return order;
}

std::vector<Index> apply_rule(const VectorXd& column_scores, const SelectionRule& rule) {
    const Index p = column_scores.size();
    if (const auto* t = std::get_if<ThresholdRule>(&rule)) {
        if (!(t->kappa > 0.0)) throw ConfigError("kappa must be > 0");
        std::vector<Index> out;
        for (Index j = 0; j < p; ++j) {
            if (column_scores(j) >= t->kappa) out.push_back(j);
        }
        return out;
    }
    const Index s = std::get<TopSRule>(rule).s;
    if (s < 1 || s > p) throw ConfigError("s must lie in [1, " + std::to_string(p) + "], got " + std::to_string(s));
    return top_indices(column_scores, s);
}

SelectionResult select(const SteinMoment& m, Index k1, const SelectionRule& rule) {
    SelectionResult result;
    result.w_hat = top_k_rows(m, k1);
    result.column_scores = result.w_hat.colwise().norm().transpose();
    result.k1_used = k1;
    result.rule = rule;
    result.selected = apply_rule(result.column_scores, rule);
    result.empty_selection = std::holds_alternative<ThresholdRule>(rule) && result.selected.empty();
    return result;
}

}  // namespace steinselect
