#include "cohlab/timeseries.hpp"

#include <cstdio>
#include <stdexcept>

namespace cohlab {

TimeSeries::TimeSeries(double t0, double dt, std::vector<std::string> labels)
    : t0_(t0), dt_(dt), labels_(std::move(labels)) {
    if (!(dt > 0.0)) throw std::invalid_argument("TimeSeries: dt must be > 0");
    if (labels_.empty()) throw std::invalid_argument("TimeSeries: need at least one column");
}

void TimeSeries::push_back(std::span<const double> row) {
    if (row.size() != columns())
        throw std::invalid_argument("TimeSeries: row width does not match labels");
    data_.insert(data_.end(), row.begin(), row.end());
    ++rows_;
}

std::size_t TimeSeries::column_index(std::string_view label) const {
    for (std::size_t i = 0; i < labels_.size(); ++i)
        if (labels_[i] == label) return i;
    throw std::out_of_range("TimeSeries: no column named '" + std::string(label) + "'");
}

std::vector<double> TimeSeries::column(std::string_view label) const {
    const std::size_t c = column_index(label);
    std::vector<double> out(rows_);
    for (std::size_t i = 0; i < rows_; ++i) out[i] = value(i, c);
    return out;
}

void TimeSeries::write_csv(std::ostream& out, std::span<const std::string> comments) const {
    for (const auto& line : comments) out << "# " << line << '\n';
    out << 't';
    for (const auto& l : labels_) out << ',' << l;
    out << '\n';
    char buf[32];
    for (std::size_t i = 0; i < rows_; ++i) {
        std::snprintf(buf, sizeof buf, "%.15g", time(i));
        out << buf;
        for (std::size_t c = 0; c < columns(); ++c) {
            std::snprintf(buf, sizeof buf, "%.15g", value(i, c));
            out << ',' << buf;
        }
        out << '\n';
    }
}

}  // namespace cohlab
