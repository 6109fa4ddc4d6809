#include "steinselect/covariance.hpp"

#include "steinselect/error.hpp"

#include <algorithm>
#include <cmath>

namespace steinselect {

namespace {

// Intensity floor applied only when the shrunk estimate would still be
// singular (e.g. two centered samples, where the sampling-noise term is 0).
constexpr double kSingularShrinkageFloor = 1e-6;

double jitter_floor(const MatrixXd& s) {
    return 1e-10 * s.trace() / static_cast<double>(s.rows());
}

MatrixXd gram(const MatrixXd& x) {
    const Index p = x.cols();
    MatrixXd s = MatrixXd::Zero(p, p);
    s.selfadjointView<Eigen::Lower>().rankUpdate(x.transpose(), 1.0 / static_cast<double>(x.rows()));
    s.triangularView<Eigen::StrictlyUpper>() = s.transpose();
    return s;
}

double smallest_eigenvalue(const MatrixXd& s) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(s, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw NumericalError("eigenvalue computation did not converge");
    return es.eigenvalues()(0);
}

MatrixXd spd_inverse(const MatrixXd& sigma) {
    Eigen::LLT<MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success) throw RankError("covariance is not positive definite (Cholesky failed)");
    MatrixXd inv = llt.solve(MatrixXd::Identity(sigma.rows(), sigma.cols()));
    return 0.5 * (inv + inv.transpose());
}

MatrixXd centered_design(const Dataset& d, bool& centered_here) {
    centered_here = !d.centered();
    if (d.centered()) return d.x();
    MatrixXd x = d.x();
    x.rowwise() -= x.colwise().mean();
    return x;
}

}  // namespace

std::string to_string(CovarianceMethod m) {
    switch (m) {
    case CovarianceMethod::known: return "known";
    case CovarianceMethod::sample: return "sample";
    case CovarianceMethod::ledoit_wolf: return "ledoit_wolf";
    }
    return "unknown";
}

CovarianceModel known_covariance(const MatrixXd& sigma) {
    if (sigma.rows() != sigma.cols() || sigma.rows() < 1) {
        throw DimensionError("covariance must be a non-empty square matrix, got " +
                             std::to_string(sigma.rows()) + "x" + std::to_string(sigma.cols()));
    }
    const double scale = std::max(sigma.cwiseAbs().maxCoeff(), 1e-300);
    if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
        throw DimensionError("covariance must be symmetric");
    }
    CovarianceModel cov;
    cov.sigma = 0.5 * (sigma + sigma.transpose());
    cov.min_eig = smallest_eigenvalue(cov.sigma);
    if (!(cov.min_eig > 0.0)) {
        throw RankError("supplied covariance is not positive definite (min eigenvalue " +
                        format_double(cov.min_eig) + ")");
    }
    cov.sigma_inv = spd_inverse(cov.sigma);
    cov.method = CovarianceMethod::known;
    return cov;
}

CovarianceModel sample_covariance(const Dataset& d) {
    if (d.n() < 2) throw ValidationError("sample covariance needs n >= 2");
    CovarianceModel cov;
    const MatrixXd x = centered_design(d, cov.centered_internally);
    cov.sigma = gram(x);
    cov.method = CovarianceMethod::sample;
    cov.min_eig = smallest_eigenvalue(cov.sigma);
    if (cov.min_eig <= jitter_floor(cov.sigma)) {
        throw RankError("sample covariance is singular (min eigenvalue " + format_double(cov.min_eig) +
                        ", n=" + std::to_string(d.n()) + ", p=" + std::to_string(d.p()) +
                        "); use the Ledoit-Wolf estimator");
    }
    cov.sigma_inv = spd_inverse(cov.sigma);
    return cov;
}

CovarianceModel ledoit_wolf_covariance(const Dataset& d, std::optional<double> shrinkage_override) {
    if (d.n() < 2) throw ValidationError("Ledoit-Wolf covariance needs n >= 2");
    if (shrinkage_override && !(*shrinkage_override >= 0.0 && *shrinkage_override <= 1.0)) {
        throw ConfigError("shrinkage override must lie in [0, 1]");
    }
    CovarianceModel cov;
    const MatrixXd x = centered_design(d, cov.centered_internally);
    if (x.cwiseAbs().maxCoeff() == 0.0) throw DegenerateInputError("Ledoit-Wolf: all samples are zero");

    const auto n = static_cast<double>(x.rows());
    const Index p = x.cols();
    const MatrixXd s = gram(x);
    const double mu = s.trace() / static_cast<double>(p);

    double delta = 0.0;
    if (shrinkage_override) {
        delta = *shrinkage_override;
    } else {
        MatrixXd dev = s;
        dev.diagonal().array() -= mu;
        const double d2 = dev.squaredNorm() / static_cast<double>(p);
        // sum_i ||x_i x_i' - S||_F^2 = sum_i ||x_i||^4 - n ||S||_F^2
        const double fourth = x.rowwise().squaredNorm().array().square().sum();
        const double b2_bar = std::max(0.0, (fourth - n * s.squaredNorm()) / (n * n * static_cast<double>(p)));
        delta = d2 > 0.0 ? std::min(b2_bar, d2) / d2 : 0.0;
    }

    const double s_min = std::max(0.0, smallest_eigenvalue(s));
    const double floor = jitter_floor(s);
    if ((1.0 - delta) * s_min + delta * mu <= floor && !shrinkage_override) {
        delta = std::max(delta, kSingularShrinkageFloor);
    }

    cov.sigma = (1.0 - delta) * s;
    cov.sigma.diagonal().array() += delta * mu;
    cov.shrinkage = delta;
    cov.min_eig = (1.0 - delta) * s_min + delta * mu;
    cov.method = CovarianceMethod::ledoit_wolf;
    if (cov.min_eig <= floor) throw RankError("Ledoit-Wolf estimate is singular");
    cov.sigma_inv = spd_inverse(cov.sigma);
    return cov;
}

CovarianceModel known_submatrix(const CovarianceModel& full, std::span<const Index> subset) {
    MatrixXd sub(static_cast<Index>(subset.size()), static_cast<Index>(subset.size()));
    for (std::size_t a = 0; a < subset.size(); ++a) {
        for (std::size_t b = 0; b < subset.size(); ++b) {
            sub(static_cast<Index>(a), static_cast<Index>(b)) = full.sigma(subset[a], subset[b]);
        }
    }
    return known_covariance(sub);
}

}  // namespace steinselect
