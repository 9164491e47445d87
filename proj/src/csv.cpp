#include "ihsp/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace ihsp {

namespace {

std::vector<std::string> split_line(const std::string& line)
{
    std::vector<std::string> out;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::ofstream open_out(const std::string& path)
{
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    return os;
}

std::ifstream open_in(const std::string& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open '" + path + "' for reading");
    return is;
}

}  // namespace

std::string format_number(double v)
{
    if (!std::isfinite(v)) throw IoError("refusing to write a non-finite value");
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_number(const std::string& s)
{
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    while (first < last && (*first == ' ' || *first == '\t')) ++first;
    while (last > first && (last[-1] == ' ' || last[-1] == '\r' || last[-1] == '\t')) --last;
    auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last) throw IoError("not a number: '" + s + "'");
    return v;
}

void write_field_csv(const std::string& path, const FieldTable& table)
{
    if (table.values.rows() != table.t.size() || table.values.cols() != table.X.size())
        throw IoError("write_field_csv: shape mismatch");
    auto os = open_out(path);
    os << "t\\X";
    for (Eigen::Index n = 0; n < table.X.size(); ++n) os << ',' << format_number(table.X[n]);
    os << '\n';
    for (Eigen::Index k = 0; k < table.t.size(); ++k) {
        os << format_number(table.t[k]);
        for (Eigen::Index n = 0; n < table.X.size(); ++n) os << ',' << format_number(table.values(k, n));
        os << '\n';
    }
    if (!os) throw IoError("write failed on '" + path + "'");
}

FieldTable read_field_csv(const std::string& path)
{
    auto is = open_in(path);
    std::string line;
    if (!std::getline(is, line)) throw IoError("empty field file '" + path + "'");
    auto head = split_line(line);
    if (head.size() < 2) throw IoError("field file '" + path + "' has no X nodes");
    FieldTable out;
    out.X.resize(static_cast<Eigen::Index>(head.size() - 1));
    for (std::size_t n = 1; n < head.size(); ++n) out.X[n - 1] = parse_number(head[n]);

    std::vector<double> times;
    std::vector<double> body;
    while (std::getline(is, line)) {
        if (line.empty() || line == "\r") continue;
        auto cells = split_line(line);
        if (cells.size() != head.size())
            throw IoError("ragged row in '" + path + "' at time row " + std::to_string(times.size()));
        times.push_back(parse_number(cells[0]));
        for (std::size_t n = 1; n < cells.size(); ++n) body.push_back(parse_number(cells[n]));
    }
    const auto nt = static_cast<Eigen::Index>(times.size());
    out.t = Eigen::Map<Eigen::VectorXd>(times.data(), nt);
    out.values = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        body.data(), nt, out.X.size());
    return out;
}

void write_columns_csv(const std::string& path, const ColumnTable& table)
{
    if (table.header.size() != table.columns.size()) throw IoError("write_columns_csv: header/column count mismatch");
    const Eigen::Index rows = table.columns.empty() ? 0 : table.columns.front().size();
    for (const auto& col : table.columns)
        if (col.size() != rows) throw IoError("write_columns_csv: columns differ in length");
    auto os = open_out(path);
    for (std::size_t j = 0; j < table.header.size(); ++j) os << (j ? "," : "") << table.header[j];
    os << '\n';
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (std::size_t j = 0; j < table.columns.size(); ++j) os << (j ? "," : "") << format_number(table.columns[j][r]);
        os << '\n';
    }
    if (!os) throw IoError("write failed on '" + path + "'");
}

ColumnTable read_columns_csv(const std::string& path)
{
    auto is = open_in(path);
    std::string line;
    if (!std::getline(is, line)) throw IoError("empty table '" + path + "'");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    ColumnTable out;
    out.header = split_line(line);
    std::vector<std::vector<double>> cols(out.header.size());
    while (std::getline(is, line)) {
        if (line.empty() || line == "\r") continue;
        auto cells = split_line(line);
        if (cells.size() != cols.size()) throw IoError("ragged row in '" + path + "'");
        for (std::size_t j = 0; j < cells.size(); ++j) cols[j].push_back(parse_number(cells[j]));
    }
    for (auto& c : cols) out.columns.push_back(Eigen::Map<Eigen::VectorXd>(c.data(), static_cast<Eigen::Index>(c.size())));
    return out;
}

}  // namespace ihsp
