#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace steinselect {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// n x p design with its response. Immutable once constructed; every
/// constructor validates the shape and id invariants.
class Dataset {
public:
    Dataset(MatrixXd x, VectorXd y, std::vector<std::string> feature_ids, bool centered = false);
    /// Feature ids default to "x0", "x1", ...
    Dataset(MatrixXd x, VectorXd y);

    const MatrixXd& x() const noexcept { return x_; }
    const VectorXd& y() const noexcept { return y_; }
    const std::vector<std::string>& feature_ids() const noexcept { return feature_ids_; }
    bool centered() const noexcept { return centered_; }

    Index n() const noexcept { return x_.rows(); }
    Index p() const noexcept { return x_.cols(); }

    /// Column subset in the given order; ids follow the columns.
    Dataset select_columns(std::span<const Index> columns) const;
    /// Position of `id` in feature_ids, or -1.
    Index find_feature(const std::string& id) const;

    static std::vector<std::string> default_ids(Index p);

private:
    MatrixXd x_;
    VectorXd y_;
    std::vector<std::string> feature_ids_;
    bool centered_;
};

/// Reads a header-first CSV; `response_column` becomes y, the remaining
/// columns become X in file order. An empty `response_column` reads every
/// column as a feature and leaves y at zero.
Dataset load_csv(const std::filesystem::path& path, const std::string& response_column);
Dataset parse_csv(const std::string& text, const std::string& response_column);

/// Writes `response_column` first, then the features, in the layout load_csv
/// reads. Numbers use the shortest round-trip representation.
void save_csv(const Dataset& d, const std::filesystem::path& path,
              const std::string& response_column = "y");
std::string to_csv(const Dataset& d, const std::string& response_column = "y");

/// Headerless numeric matrix (one row per line), used for covariance files.
MatrixXd load_matrix_csv(const std::filesystem::path& path);
void save_matrix_csv(const MatrixXd& m, const std::filesystem::path& path);

Dataset center_columns(const Dataset& d);

/// Subtracts the mean of y; X and the centered flag are kept. Since the
/// Gaussian score has mean zero this leaves E[y T(x)] unchanged, and it
/// removes the ybar * mean(T) term that an estimated covariance other than
/// the sample covariance leaves behind.
Dataset center_response(const Dataset& d);

/// Shortest decimal string that parses back to exactly `v`.
std::string format_double(double v);

}  // namespace steinselect
