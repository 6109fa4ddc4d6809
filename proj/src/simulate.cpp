#include "steinselect/simulate.hpp"

#include "steinselect/error.hpp"
#include "steinselect/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <random>

namespace steinselect {

namespace {

// Unit-variance draws from the design's marginal, colored by the AR(1)
// Cholesky factor. The recursion x_j = rho x_{j-1} + sqrt(1 - rho^2) e_j is
// exactly L e for Sigma = L L'.
MatrixXd draw_design(const SimSpec& spec, Index n, Rng& rng) {
    MatrixXd x(n, spec.p);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::student_t_distribution<double> student(spec.design.dof);
    const bool gaussian = spec.design.kind == Design::Kind::gaussian;
    const double t_scale = gaussian ? 1.0 : std::sqrt((spec.design.dof - 2.0) / spec.design.dof);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < spec.p; ++j) x(i, j) = gaussian ? normal(rng) : t_scale * student(rng);
    }
    if (spec.rho != 0.0) {
        const double innov = std::sqrt(1.0 - spec.rho * spec.rho);
        for (Index j = 1; j < spec.p; ++j) x.col(j) = spec.rho * x.col(j - 1) + innov * x.col(j);
    }
    return x;
}

VectorXd draw_response(const SimSpec& spec, const GroundTruth& truth, const MatrixXd& x, Rng& rng) {
    std::normal_distribution<double> normal(0.0, spec.noise_sd > 0.0 ? spec.noise_sd : 1.0);
    VectorXd y(x.rows());
    for (Index i = 0; i < x.rows(); ++i) {
        const double noise = spec.noise_sd > 0.0 ? normal(rng) : 0.0;
        y(i) = response_mean(spec.sim_case, truth, x.row(i).transpose()) + noise;
    }
    return y;
}

}  // namespace

Design Design::parse(const std::string& text) {
    if (text == "gaussian") return gaussian();
    if (text.size() > 1 && text[0] == 't') {
        double dof = 0.0;
        const char* first = text.data() + 1;
        const char* last = text.data() + text.size();
        const auto [ptr, ec] = std::from_chars(first, last, dof);
        if (ec == std::errc{} && ptr == last) return student_t(dof);
    }
    throw ConfigError("design must be \"gaussian\" or \"t<dof>\", got \"" + text + "\"");
}

std::string Design::name() const {
    if (kind == Kind::gaussian) return "gaussian";
    return "t" + format_double(dof);
}

bool SimSpec::index_model() const noexcept {
    return sim_case == SimCase::case1 || sim_case == SimCase::case2 || sim_case == SimCase::case3;
}

void SimSpec::validate() const {
    if (n < 1) throw ConfigError("n must be >= 1");
    if (p < 1) throw ConfigError("p must be >= 1");
    if (s < 1) throw ConfigError("s must be >= 1");
    if (s > p) throw ConfigError("s must be <= p");
    if (!(rho >= 0.0 && rho < 1.0)) throw ConfigError("rho must lie in [0, 1)");
    if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd)) throw ConfigError("noise_sd must be a finite value >= 0");
    if (design.kind == Design::Kind::student_t && !(design.dof > 2.0)) {
        throw ConfigError("student-t design needs dof > 2 for unit-variance scaling");
    }
    if (index_model()) {
        if (k1 < 1) throw ConfigError("k1 must be >= 1");
        if (k1 > s) throw ConfigError("k1 must be <= s");
    } else if (s != 5) {
        throw ConfigError(case_name(sim_case) + " has a fixed arity of 5; s must be 5");
    }
}

double link_f1(double z) { return z * z; }
double link_f2(double z) { return std::pow(z, 4) + 2.0 * z * z - 10.0 * std::cos(z); }
double link_f3(double z) { return std::exp(z) + std::pow(z, 4) - z * z; }
double link_f5(double z) { return std::pow(z, 4) + z * z - std::cos(z); }

double response_mean(SimCase c, const GroundTruth& truth, const VectorXd& x) {
    switch (c) {
    case SimCase::case1:
    case SimCase::case2:
    case SimCase::case3: {
        const VectorXd z = truth.w1 * x;
        double (*f)(double) = c == SimCase::case1 ? link_f1 : c == SimCase::case2 ? link_f2 : link_f3;
        double y = 0.0;
        for (Index k = 0; k < z.size(); ++k) y += truth.a(k) * f(z(k));
        return y;
    }
    case SimCase::case4:
    case SimCase::case5: {
        if (truth.support.size() != 5) throw ConfigError("cases 4 and 5 need a support of size 5");
        double z[5];
        for (std::size_t t = 0; t < 5; ++t) z[t] = x(truth.support[t]);
        if (c == SimCase::case4) {
            return link_f1(z[0]) + link_f2(z[1]) + link_f3(z[2]) + link_f2(z[3]) + link_f5(z[4]);
        }
        return link_f1(z[0]) * link_f2(z[1]) + link_f3(z[2]) + link_f1(z[3]) * link_f5(z[4]);
    }
    }
    throw ConfigError("unknown simulation case");
}

MatrixXd ar1_covariance(Index p, double rho) {
    MatrixXd sigma(p, p);
    for (Index j = 0; j < p; ++j) {
        for (Index k = 0; k < p; ++k) sigma(j, k) = std::pow(rho, static_cast<double>(std::abs(j - k)));
    }
    return sigma;
}

std::pair<Dataset, GroundTruth> simulate(const SimSpec& spec) {
    spec.validate();

    GroundTruth truth;
    {
        Rng rng = make_rng(spec.seed, "support");
        std::vector<Index> all(static_cast<std::size_t>(spec.p));
        std::iota(all.begin(), all.end(), Index{0});
        // Partial Fisher-Yates: the first s slots are a uniform draw without replacement.
        for (Index k = 0; k < spec.s; ++k) {
            std::uniform_int_distribution<Index> pick(k, spec.p - 1);
            std::swap(all[static_cast<std::size_t>(k)], all[static_cast<std::size_t>(pick(rng))]);
        }
        truth.support.assign(all.begin(), all.begin() + spec.s);
        std::sort(truth.support.begin(), truth.support.end());
    }

    if (spec.index_model()) {
        Rng rng = make_rng(spec.seed, "weights");
        std::normal_distribution<double> normal(0.0, 1.0);
        std::uniform_real_distribution<double> uniform(0.5, 1.5);
        truth.w1 = MatrixXd::Zero(spec.k1, spec.p);
        for (Index r = 0; r < spec.k1; ++r) {
            for (Index j : truth.support) truth.w1(r, j) = normal(rng);
            truth.w1.row(r).normalize();
        }
        truth.a.resize(spec.k1);
        for (Index r = 0; r < spec.k1; ++r) truth.a(r) = uniform(rng);
    } else {
        truth.w1 = MatrixXd::Zero(spec.s, spec.p);
        for (Index t = 0; t < spec.s; ++t) truth.w1(t, truth.support[static_cast<std::size_t>(t)]) = 1.0;
    }

    Rng design_rng = make_rng(spec.seed, "design");
    MatrixXd x = draw_design(spec, spec.n, design_rng);
    Rng noise_rng = make_rng(spec.seed, "noise");
    VectorXd y = draw_response(spec, truth, x, noise_rng);
    return {Dataset(std::move(x), std::move(y)), std::move(truth)};
}

Dataset simulate_from_truth(const SimSpec& spec, const GroundTruth& truth, Index n, std::uint64_t seed) {
    spec.validate();
    if (n < 1) throw ConfigError("held-out n must be >= 1");
    Rng design_rng = make_rng(seed, "design");
    MatrixXd x = draw_design(spec, n, design_rng);
    Rng noise_rng = make_rng(seed, "noise");
    VectorXd y = draw_response(spec, truth, x, noise_rng);
    return Dataset(std::move(x), std::move(y));
}

std::string case_name(SimCase c) { return "case" + std::to_string(static_cast<int>(c)); }

SimCase parse_case(int number) {
    if (number < 1 || number > 5) throw ConfigError("case must be 1..5, got " + std::to_string(number));
    return static_cast<SimCase>(number);
}

}  // namespace steinselect
