// CSV readers and writers for space-time fields and column tables.
#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace ihsp {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Shortest decimal text that parses back to the same double.
std::string format_number(double v);
double parse_number(const std::string& s);

struct FieldTable {
    Eigen::VectorXd X;
    Eigen::VectorXd t;
    Eigen::MatrixXd values;  // rows = times, cols = nodes
};

// First row: corner label then X nodes. Following rows: time then the profile.
void write_field_csv(const std::string& path, const FieldTable& table);
FieldTable read_field_csv(const std::string& path);

struct ColumnTable {
    std::vector<std::string> header;
    std::vector<Eigen::VectorXd> columns;
};

void write_columns_csv(const std::string& path, const ColumnTable& table);
ColumnTable read_columns_csv(const std::string& path);

}  // namespace ihsp
