#include "steinselect/dataset.hpp"

#include "steinselect/error.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace steinselect {

namespace {

void check_centered(const MatrixXd& x) {
    for (Index j = 0; j < x.cols(); ++j) {
        const double mean = x.col(j).mean();
        const double scale = 1.0 + x.col(j).cwiseAbs().maxCoeff();
        if (std::abs(mean) > 1e-10 * scale) {
            throw ValidationError("dataset flagged centered but column " + std::to_string(j) +
                                  " has mean " + format_double(mean));
        }
    }
}

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t");
    return std::string(s.substr(first, last - first + 1));
}

// RFC-4180 records: quoted fields may hold commas, doubled quotes and newlines.
std::vector<std::vector<std::string>> split_records(const std::string& text) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;

    auto end_field = [&] {
        record.push_back(field);
        field.clear();
        field_started = false;
    };
    auto end_record = [&] {
        end_field();
        const bool blank = record.size() == 1 && trim(record[0]).empty();
        if (!blank) records.push_back(std::move(record));
        record.clear();
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
        case '"':
            if (!field_started || trim(field).empty()) {
                field.clear();
                in_quotes = true;
                field_started = true;
            } else {
                field.push_back(c);
            }
            break;
        case ',':
            end_field();
            break;
        case '\r':
            break;
        case '\n':
            end_record();
            break;
        default:
            field.push_back(c);
            field_started = true;
        }
    }
    if (in_quotes) throw ParseError("unterminated quoted field", records.size(), "");
    if (field_started || !field.empty() || !record.empty()) end_record();
    return records;
}

double parse_cell(const std::string& raw, std::size_t row, const std::string& column) {
    const std::string cell = trim(raw);
    double value = 0.0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    if (first != last && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (cell.empty() || ec != std::errc{} || ptr != last) {
        throw ParseError("row " + std::to_string(row) + ", column \"" + column +
                             "\": cannot parse \"" + cell + "\" as a number",
                         row, column);
    }
    if (!std::isfinite(value)) {
        throw ParseError("row " + std::to_string(row) + ", column \"" + column +
                             "\": non-finite value \"" + cell + "\"",
                         row, column);
    }
    return value;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SchemaError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << text;
}

std::string quote_if_needed(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    return out + "\"";
}

}  // namespace

Dataset::Dataset(MatrixXd x, VectorXd y, std::vector<std::string> feature_ids, bool centered)
    : x_(std::move(x)), y_(std::move(y)), feature_ids_(std::move(feature_ids)), centered_(centered) {
    if (x_.rows() < 1 || x_.cols() < 1) throw ValidationError("dataset needs n >= 1 and p >= 1");
    if (x_.rows() != y_.size()) {
        throw DimensionError("X has " + std::to_string(x_.rows()) + " rows but y has " +
                             std::to_string(y_.size()) + " entries");
    }
    if (static_cast<Index>(feature_ids_.size()) != x_.cols()) {
        throw DimensionError("expected " + std::to_string(x_.cols()) + " feature ids, got " +
                             std::to_string(feature_ids_.size()));
    }
    std::unordered_set<std::string> seen;
    for (const auto& id : feature_ids_) {
        if (!seen.insert(id).second) throw SchemaError("duplicate feature id \"" + id + "\"");
    }
    if (centered_) check_centered(x_);
}

Dataset::Dataset(MatrixXd x, VectorXd y) : Dataset(x, std::move(y), default_ids(x.cols())) {}

std::vector<std::string> Dataset::default_ids(Index p) {
    std::vector<std::string> ids;
    ids.reserve(static_cast<std::size_t>(p));
    for (Index j = 0; j < p; ++j) ids.push_back("x" + std::to_string(j));
    return ids;
}

Dataset Dataset::select_columns(std::span<const Index> columns) const {
    MatrixXd sub(n(), static_cast<Index>(columns.size()));
    std::vector<std::string> ids;
    ids.reserve(columns.size());
    for (std::size_t k = 0; k < columns.size(); ++k) {
        const Index j = columns[k];
        if (j < 0 || j >= p()) throw DimensionError("column index " + std::to_string(j) + " out of range");
        sub.col(static_cast<Index>(k)) = x_.col(j);
        ids.push_back(feature_ids_[static_cast<std::size_t>(j)]);
    }
    return Dataset(std::move(sub), y_, std::move(ids), centered_);
}

Index Dataset::find_feature(const std::string& id) const {
    for (std::size_t j = 0; j < feature_ids_.size(); ++j) {
        if (feature_ids_[j] == id) return static_cast<Index>(j);
    }
    return -1;
}

Dataset parse_csv(const std::string& text, const std::string& response_column) {
    const auto records = split_records(text);
    if (records.empty()) throw SchemaError("CSV has no header row");

    std::vector<std::string> header;
    for (const auto& h : records.front()) header.push_back(trim(h));
    std::unordered_map<std::string, std::size_t> position;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (header[c].empty()) throw SchemaError("empty column name at position " + std::to_string(c));
        if (!position.emplace(header[c], c).second) {
            throw SchemaError("duplicate column \"" + header[c] + "\"");
        }
    }
    const bool has_response = !response_column.empty();
    std::size_t response_at = header.size();
    if (has_response) {
        const auto response = position.find(response_column);
        if (response == position.end()) {
            throw SchemaError("response column \"" + response_column + "\" not found");
        }
        response_at = response->second;
    }
    if (header.size() < (has_response ? 2u : 1u)) throw SchemaError("CSV needs at least one feature column");

    const auto n = static_cast<Index>(records.size() - 1);
    if (n < 1) throw SchemaError("CSV has no data rows");
    const auto p = static_cast<Index>(header.size() - (has_response ? 1 : 0));

    MatrixXd x(n, p);
    VectorXd y = VectorXd::Zero(n);
    std::vector<std::string> ids;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (c != response_at) ids.push_back(header[c]);
    }
    for (Index i = 0; i < n; ++i) {
        const auto& rec = records[static_cast<std::size_t>(i) + 1];
        const auto row = static_cast<std::size_t>(i) + 1;
        if (rec.size() != header.size()) {
            throw ParseError("row " + std::to_string(row) + " has " + std::to_string(rec.size()) +
                                 " fields, expected " + std::to_string(header.size()),
                             row, "");
        }
        Index j = 0;
        for (std::size_t c = 0; c < rec.size(); ++c) {
            const double v = parse_cell(rec[c], row, header[c]);
            if (c == response_at) y(i) = v;
            else x(i, j++) = v;
        }
    }
    return Dataset(std::move(x), std::move(y), std::move(ids), false);
}

Dataset load_csv(const std::filesystem::path& path, const std::string& response_column) {
    return parse_csv(read_file(path), response_column);
}

std::string to_csv(const Dataset& d, const std::string& response_column) {
    if (d.find_feature(response_column) >= 0) {
        throw SchemaError("response column \"" + response_column + "\" collides with a feature id");
    }
    std::string out = quote_if_needed(response_column);
    for (const auto& id : d.feature_ids()) out += "," + quote_if_needed(id);
    out += "\n";
    for (Index i = 0; i < d.n(); ++i) {
        out += format_double(d.y()(i));
        for (Index j = 0; j < d.p(); ++j) {
            out += ',';
            out += format_double(d.x()(i, j));
        }
        out += '\n';
    }
    return out;
}

void save_csv(const Dataset& d, const std::filesystem::path& path, const std::string& response_column) {
    write_file(path, to_csv(d, response_column));
}

MatrixXd load_matrix_csv(const std::filesystem::path& path) {
    const auto records = split_records(read_file(path));
    if (records.empty()) throw SchemaError("matrix file " + path.string() + " is empty");
    const auto rows = static_cast<Index>(records.size());
    const auto cols = static_cast<Index>(records.front().size());
    MatrixXd m(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        const auto& rec = records[static_cast<std::size_t>(i)];
        const auto row = static_cast<std::size_t>(i) + 1;
        if (static_cast<Index>(rec.size()) != cols) {
            throw ParseError("matrix row " + std::to_string(row) + " has " + std::to_string(rec.size()) +
                                 " entries, expected " + std::to_string(cols),
                             row, "");
        }
        for (Index j = 0; j < cols; ++j) m(i, j) = parse_cell(rec[static_cast<std::size_t>(j)], row, std::to_string(j));
    }
    return m;
}

void save_matrix_csv(const MatrixXd& m, const std::filesystem::path& path) {
    std::string out;
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            if (j > 0) out += ',';
            out += format_double(m(i, j));
        }
        out += '\n';
    }
    write_file(path, out);
}

Dataset center_columns(const Dataset& d) {
    MatrixXd x = d.x();
    x.rowwise() -= x.colwise().mean();
    return Dataset(std::move(x), d.y(), d.feature_ids(), true);
}

Dataset center_response(const Dataset& d) {
    VectorXd y = d.y();
    if (y.size() > 0) y.array() -= y.mean();
    return Dataset(d.x(), std::move(y), d.feature_ids(), d.centered());
}

std::string format_double(double v) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) return std::to_string(v);
    return std::string(buf, ptr);
}

}  // namespace steinselect
