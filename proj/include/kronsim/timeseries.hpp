#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kronsim/error.hpp"

namespace kronsim {

/// Recorded trajectories: one row per sample, one column per named signal.
/// Time is kept separately and is not one of the columns.
class TimeSeries {
 public:
  TimeSeries() = default;
  explicit TimeSeries(std::vector<std::string> columns) : columns_(std::move(columns)) {}

  const std::vector<std::string>& columns() const { return columns_; }
  const std::vector<double>& times() const { return times_; }
  std::size_t size() const { return times_.size(); }
  std::size_t width() const { return columns_.size(); }
  bool empty() const { return times_.empty(); }

  void append(double t, std::span<const double> row) {
    if (row.size() != columns_.size()) {
      throw Error(ErrorKind::DimensionMismatch, "row has " + std::to_string(row.size()) +
                                                    " values for " +
                                                    std::to_string(columns_.size()) + " columns");
    }
    times_.push_back(t);
    values_.insert(values_.end(), row.begin(), row.end());
  }

  double at(std::size_t sample, std::size_t column) const {
    return values_[sample * columns_.size() + column];
  }
  double& at(std::size_t sample, std::size_t column) {
    return values_[sample * columns_.size() + column];
  }

  std::span<const double> row(std::size_t sample) const {
    return std::span(values_).subspan(sample * columns_.size(), columns_.size());
  }

  std::optional<std::size_t> index_of(const std::string& name) const {
    auto it = std::find(columns_.begin(), columns_.end(), name);
    if (it == columns_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - columns_.begin());
  }

  bool has(const std::string& name) const { return index_of(name).has_value(); }

  std::vector<double> column(const std::string& name) const {
    auto idx = index_of(name);
    if (!idx) throw Error(ErrorKind::UnknownField, "no signal named '" + name + "'");
    std::vector<double> out(size());
    for (std::size_t k = 0; k < size(); ++k) out[k] = at(k, *idx);
    return out;
  }

  friend bool operator==(const TimeSeries&, const TimeSeries&) = default;

 private:
  std::vector<std::string> columns_;
  std::vector<double> times_;
  std::vector<double> values_;
};

struct SignalDeviation {
  std::string name;
  double max_abs = 0.0;
  double rms = 0.0;
  double time_of_max = 0.0;
};

struct ComparisonReport {
  std::vector<SignalDeviation> signals;

  double worst() const {
    double w = 0.0;
    for (const auto& s : signals) w = std::max(w, s.max_abs);
    return w;
  }

  bool within(double tol) const {
    return std::all_of(signals.begin(), signals.end(),
                       [&](const SignalDeviation& s) { return s.max_abs <= tol; });
  }
};

/// Columns present in both series, in the order of `a`.
inline std::vector<std::string> shared_signals(const TimeSeries& a, const TimeSeries& b) {
  std::vector<std::string> out;
  for (const auto& name : a.columns()) {
    if (b.has(name)) out.push_back(name);
  }
  return out;
}

/// Pointwise deviation of selected signals. Both series must sit on the same
/// time grid. An empty selection means every shared signal.
inline ComparisonReport compare(const TimeSeries& a, const TimeSeries& b,
                                std::vector<std::string> signals = {}) {
  if (a.size() != b.size()) {
    throw Error(ErrorKind::GridMismatch, "series have " + std::to_string(a.size()) + " and " +
                                             std::to_string(b.size()) + " samples");
  }
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double ta = a.times()[k];
    const double tb = b.times()[k];
    if (std::abs(ta - tb) > 1e-12 * (1.0 + std::abs(ta))) {
      throw Error(ErrorKind::GridMismatch, "sample " + std::to_string(k) + " is at t=" +
                                               std::to_string(ta) + " vs t=" + std::to_string(tb));
    }
  }
  if (signals.empty()) signals = shared_signals(a, b);
  if (signals.empty()) throw Error(ErrorKind::EmptySelection, "no signals to compare");

  ComparisonReport report;
  for (const auto& name : signals) {
    auto ia = a.index_of(name);
    auto ib = b.index_of(name);
    if (!ia || !ib) {
      throw Error(ErrorKind::UnknownField, "signal '" + name + "' is missing from one series");
    }
    SignalDeviation dev{name};
    double sum_sq = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
      const double d = std::abs(a.at(k, *ia) - b.at(k, *ib));
      sum_sq += d * d;
      if (d > dev.max_abs || std::isnan(d)) {
        dev.max_abs = std::isnan(d) ? INFINITY : d;
        dev.time_of_max = a.times()[k];
      }
    }
    dev.rms = a.empty() ? 0.0 : std::sqrt(sum_sq / static_cast<double>(a.size()));
    report.signals.push_back(std::move(dev));
  }
  return report;
}

}  // namespace kronsim
