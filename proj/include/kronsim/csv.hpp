#pragma once

// Trajectory CSV: header `time_s,<signal>,...`, then one row per sample with
// every value printed at 17 significant digits so read-back is bit-exact.

#include <charconv>
#include <cstddef>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "kronsim/error.hpp"
#include "kronsim/timeseries.hpp"

namespace kronsim {

inline void append_number(std::string& out, double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  out.append(buf, end);
}

inline void write_timeseries_csv(const TimeSeries& ts, std::ostream& out) {
  std::string line = "time_s";
  for (const auto& c : ts.columns()) {
    line += ',';
    line += c;
  }
  out << line << '\n';
  for (std::size_t k = 0; k < ts.size(); ++k) {
    line.clear();
    append_number(line, ts.times()[k]);
    for (double v : ts.row(k)) {
      line += ',';
      append_number(line, v);
    }
    out << line << '\n';
  }
}

inline void write_timeseries_csv(const TimeSeries& ts, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, "cannot open '" + path + "' for writing");
  write_timeseries_csv(ts, out);
  if (!out) throw Error(ErrorKind::IoError, "write to '" + path + "' failed");
}

namespace detail {

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace detail

inline TimeSeries read_timeseries_csv(std::istream& in, const std::string& source = "<stream>") {
  auto malformed = [&](std::size_t line_no, const std::string& what) {
    return Error(ErrorKind::MalformedCsv, source + ":" + std::to_string(line_no) + ": " + what);
  };
  std::string line;
  if (!std::getline(in, line)) throw malformed(1, "missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  auto header = detail::split_commas(line);
  if (header.empty() || header.front() != "time_s") {
    throw malformed(1, "header must start with time_s");
  }
  std::vector<std::string> columns(header.begin() + 1, header.end());
  for (const auto& c : columns) {
    if (c.empty()) throw malformed(1, "empty column name");
  }
  TimeSeries ts(columns);
  std::vector<double> row(columns.size());
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = detail::split_commas(line);
    if (fields.size() != columns.size() + 1) {
      throw malformed(line_no, "expected " + std::to_string(columns.size() + 1) + " fields, got " +
                                   std::to_string(fields.size()));
    }
    double t = 0.0;
    for (std::size_t k = 0; k < fields.size(); ++k) {
      double v = 0.0;
      auto f = fields[k];
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc() || ptr != f.data() + f.size()) {
        throw malformed(line_no, "field " + std::to_string(k + 1) + " is not a number");
      }
      if (k == 0) t = v;
      else row[k - 1] = v;
    }
    if (!ts.empty() && !(t > ts.times().back())) {
      throw malformed(line_no, "time is not strictly increasing");
    }
    ts.append(t, row);
  }
  return ts;
}

inline TimeSeries read_timeseries_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open '" + path + "'");
  return read_timeseries_csv(in, path);
}

/// Reads a file and requires its columns to be exactly `expected`.
inline TimeSeries read_timeseries_csv(const std::string& path,
                                      const std::vector<std::string>& expected) {
  TimeSeries ts = read_timeseries_csv(path);
  if (ts.columns() != expected) {
    throw Error(ErrorKind::MalformedCsv, path + ": header does not match the expected columns");
  }
  return ts;
}

}  // namespace kronsim
