#include "selfselect/csv_io.hpp"

#include "selfselect/error.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string_view>
#include <vector>

namespace selfselect::csv {

namespace {

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(',', start);
        out.push_back(line.substr(start, pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    return s;
}

double parse_double(std::string_view s, std::size_t line_no) {
    s = trim(s);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        fail(ErrorCategory::Validation, "line " + std::to_string(line_no) + ": bad number '" + std::string(s) + "'");
    return v;
}

/// Number of leading x-columns, checking the names x1..xd.
Eigen::Index covariate_columns(const std::vector<std::string>& header) {
    Eigen::Index d = 0;
    while (d < static_cast<Eigen::Index>(header.size()) &&
           header[d] == "x" + std::to_string(d + 1))
        ++d;
    return d;
}

struct Table {
    std::vector<std::string> header;
    std::vector<double> cells;  // row-major
    std::size_t rows = 0;

    double at(std::size_t r, std::size_t c) const { return cells[r * header.size() + c]; }
};

Table read_table(std::istream& in) {
    Table t;
    std::string line;
    if (!std::getline(in, line)) fail(ErrorCategory::Validation, "empty CSV");
    for (auto name : split(trim(line))) t.header.emplace_back(trim(name));
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        auto body = trim(line);
        if (body.empty()) continue;
        auto cells = split(body);
        if (cells.size() != t.header.size())
            fail(ErrorCategory::Validation, "line " + std::to_string(line_no) + ": wrong number of fields");
        for (auto cell : cells) t.cells.push_back(parse_double(cell, line_no));
        ++t.rows;
    }
    return t;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) fail(ErrorCategory::Io, "cannot write " + path.string());
    return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCategory::Io, "cannot read " + path.string());
    return in;
}

void write_header(std::ostream& out, Eigen::Index d, bool with_winner) {
    for (Eigen::Index l = 0; l < d; ++l) out << 'x' << (l + 1) << ',';
    out << 'y';
    if (with_winner) out << ",jstar";
    out << '\n';
}

}  // namespace

std::string format_double(double v) {
    char buf[40];
    int len = std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf, len);
}

void write_known(std::ostream& out, const KnownIndexDataset& data) {
    const Eigen::Index d = data.dim();
    write_header(out, d, true);
    for (Eigen::Index i = 0; i < data.size(); ++i) {
        for (Eigen::Index l = 0; l < d; ++l) out << format_double(data.x(i, l)) << ',';
        out << format_double(data.y[i]) << ',' << (data.winner[i] + 1) << '\n';
    }
}

void write_known(const std::filesystem::path& path, const KnownIndexDataset& data) {
    auto out = open_out(path);
    write_known(out, data);
}

KnownIndexDataset read_known(std::istream& in, double sigma) {
    Table t = read_table(in);
    const Eigen::Index d = covariate_columns(t.header);
    if (d < 1 || static_cast<Eigen::Index>(t.header.size()) != d + 2 || t.header[d] != "y" ||
        t.header[d + 1] != "jstar")
        fail(ErrorCategory::Validation, "known-index CSV header must be x1,...,xd,y,jstar");
    KnownIndexDataset data;
    const auto n = static_cast<Eigen::Index>(t.rows);
    data.x.resize(n, d);
    data.y.resize(n);
    data.winner.resize(n);
    data.sigma = sigma;
    int k = 1;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index l = 0; l < d; ++l) data.x(i, l) = t.at(i, l);
        data.y[i] = t.at(i, d);
        double js = t.at(i, d + 1);
        if (js < 1 || js != std::floor(js))
            fail(ErrorCategory::Validation, "row " + std::to_string(i + 2) + ": jstar must be a positive integer");
        data.winner[i] = static_cast<int>(js) - 1;
        k = std::max(k, static_cast<int>(js));
    }
    data.models = k;
    return data;
}

KnownIndexDataset read_known(const std::filesystem::path& path, double sigma) {
    auto in = open_in(path);
    return read_known(in, sigma);
}

void write_unknown(std::ostream& out, const UnknownIndexDataset& data) {
    const Eigen::Index d = data.dim();
    write_header(out, d, false);
    for (Eigen::Index i = 0; i < data.size(); ++i) {
        for (Eigen::Index l = 0; l < d; ++l) out << format_double(data.x(i, l)) << ',';
        out << format_double(data.y[i]) << '\n';
    }
}

void write_unknown(const std::filesystem::path& path, const UnknownIndexDataset& data) {
    auto out = open_out(path);
    write_unknown(out, data);
}

UnknownIndexDataset read_unknown(std::istream& in) {
    Table t = read_table(in);
    const Eigen::Index d = covariate_columns(t.header);
    if (d < 1 || static_cast<Eigen::Index>(t.header.size()) != d + 1 || t.header[d] != "y")
        fail(ErrorCategory::Validation, "unknown-index CSV header must be x1,...,xd,y");
    UnknownIndexDataset data;
    const auto n = static_cast<Eigen::Index>(t.rows);
    data.x.resize(n, d);
    data.y.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index l = 0; l < d; ++l) data.x(i, l) = t.at(i, l);
        data.y[i] = t.at(i, d);
    }
    return data;
}

UnknownIndexDataset read_unknown(const std::filesystem::path& path) {
    auto in = open_in(path);
    return read_unknown(in);
}

void write_weights(const std::filesystem::path& path, const MatrixXd& columns) {
    auto out = open_out(path);
    for (Eigen::Index l = 0; l < columns.rows(); ++l) out << (l ? "," : "") << 'w' << (l + 1);
    out << '\n';
    for (Eigen::Index j = 0; j < columns.cols(); ++j) {
        for (Eigen::Index l = 0; l < columns.rows(); ++l)
            out << (l ? "," : "") << format_double(columns(l, j));
        out << '\n';
    }
}

MatrixXd read_weights(const std::filesystem::path& path) {
    auto in = open_in(path);
    Table t = read_table(in);
    const auto d = static_cast<Eigen::Index>(t.header.size());
    const auto k = static_cast<Eigen::Index>(t.rows);
    if (k < 1) fail(ErrorCategory::Validation, "weights file has no rows");
    MatrixXd w(d, k);
    for (Eigen::Index j = 0; j < k; ++j)
        for (Eigen::Index l = 0; l < d; ++l) w(l, j) = t.at(j, l);
    return w;
}

}  // namespace selfselect::csv
