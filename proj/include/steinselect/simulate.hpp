#pragma once

#include "steinselect/dataset.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace steinselect {

/// Cases 1-3 are index models y = a' f(W1 x) + e; 4 is additive and 5 has
/// interactions, both over exactly five support coordinates.
enum class SimCase { case1 = 1, case2, case3, case4, case5 };

struct Design {
    enum class Kind { gaussian, student_t };
    Kind kind = Kind::gaussian;
    double dof = 7.0;  // student_t only

    static Design gaussian() { return {}; }
    static Design student_t(double dof) { return {Kind::student_t, dof}; }
    /// "gaussian" or "t<dof>", e.g. "t7".
    static Design parse(const std::string& text);
    std::string name() const;
};

struct SimSpec {
    SimCase sim_case = SimCase::case1;
    Index n = 1000;
    Index p = 200;
    Index s = 5;
    Index k1 = 5;
    double rho = 0.0;
    Design design;
    double noise_sd = 1.0;
    std::uint64_t seed = 0;

    /// Throws ConfigError when an invariant fails.
    void validate() const;
    bool index_model() const noexcept;
};

struct GroundTruth {
    std::vector<Index> support;  // sorted
    MatrixXd w1;                 // k1 x p; selector rows e_j' for cases 4 and 5
    VectorXd a;                  // k1 linear weights; empty for cases 4 and 5
};

/// Response link functions, applied elementwise in the index cases.
double link_f1(double z);
double link_f2(double z);
double link_f3(double z);
double link_f5(double z);

/// Noise-free response for one row under the case's functional form.
double response_mean(SimCase c, const GroundTruth& truth, const VectorXd& x);

/// Sigma_{jk} = rho^{|j-k|}.
MatrixXd ar1_covariance(Index p, double rho);

std::pair<Dataset, GroundTruth> simulate(const SimSpec& spec);

/// Fresh draw of `n` rows under an existing truth (held-out evaluation).
/// Uses sub-streams keyed on `seed`, independent of the training draw.
Dataset simulate_from_truth(const SimSpec& spec, const GroundTruth& truth, Index n, std::uint64_t seed);

std::string case_name(SimCase c);
SimCase parse_case(int number);

}  // namespace steinselect
