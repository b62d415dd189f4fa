#pragma once

#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cohlab {

// Uniformly sampled multi-column trajectory. Row k corresponds to time
// t0 + k*dt; column names are carried as labels (time itself is implicit
// and serialized as the leading "t" column).
class TimeSeries {
public:
    TimeSeries(double t0, double dt, std::vector<std::string> labels);

    void push_back(std::span<const double> row);
    void push_back(std::initializer_list<double> row) {
        push_back(std::span<const double>(row.begin(), row.size()));
    }

    std::size_t size() const { return rows_; }
    bool empty() const { return rows_ == 0; }
    std::size_t columns() const { return labels_.size(); }
    double t0() const { return t0_; }
    double dt() const { return dt_; }
    double time(std::size_t i) const { return t0_ + static_cast<double>(i) * dt_; }

    const std::vector<std::string>& labels() const { return labels_; }
    std::size_t column_index(std::string_view label) const;  // throws if unknown

    double value(std::size_t row, std::size_t col) const { return data_[row * columns() + col]; }
    std::span<const double> row(std::size_t i) const {
        return {data_.data() + i * columns(), columns()};
    }
    std::vector<double> column(std::string_view label) const;

    // CSV with a "t" column first; data printed with 15 significant digits.
    // Lines in `comments` are emitted first, each prefixed with "# ".
    void write_csv(std::ostream& out, std::span<const std::string> comments = {}) const;

private:
    double t0_;
    double dt_;
    std::vector<std::string> labels_;
    std::vector<double> data_;
    std::size_t rows_ = 0;
};

}  // namespace cohlab
