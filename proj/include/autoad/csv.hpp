#pragma once

#include <charconv>
#include <cstdio>
#include <chrono>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "autoad/error.hpp"
#include "autoad/series.hpp"

namespace autoad {

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"'))
    s.remove_suffix(1);
  return s;
}

inline bool parse_int(std::string_view s, int& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

inline bool parse_double(std::string_view s, double& out) {
  // from_chars for double is available in libstdc++ 11.
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace detail

/// Parses epoch seconds, RFC-3339 (`2014-07-01T00:00:00Z`, offsets, fractions)
/// or the space-separated `2014-07-01 00:00:00` form. Fractional seconds are truncated.
inline std::int64_t parse_timestamp(std::string_view raw) {
  using namespace std::chrono;
  const std::string_view s = detail::trim(raw);
  if (s.empty()) throw Error(ErrorKind::MalformedCsv, "empty timestamp");
  {
    std::int64_t epoch = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), epoch);
    if (ec == std::errc() && ptr == s.data() + s.size()) return epoch;
  }
  auto bad = [&] { return Error(ErrorKind::MalformedCsv, "unparseable timestamp '" + std::string(s) + "'"); };
  if (s.size() < 10 || s[4] != '-' || s[7] != '-') throw bad();
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, se = 0;
  if (!detail::parse_int(s.substr(0, 4), y) || !detail::parse_int(s.substr(5, 2), mo) ||
      !detail::parse_int(s.substr(8, 2), d))
    throw bad();
  std::size_t pos = 10;
  if (pos < s.size()) {
    if (s[pos] != 'T' && s[pos] != 't' && s[pos] != ' ') throw bad();
    ++pos;
    if (s.size() < pos + 8 || s[pos + 2] != ':' || s[pos + 5] != ':') throw bad();
    if (!detail::parse_int(s.substr(pos, 2), h) || !detail::parse_int(s.substr(pos + 3, 2), mi) ||
        !detail::parse_int(s.substr(pos + 6, 2), se))
      throw bad();
    pos += 8;
    if (pos < s.size() && s[pos] == '.') {
      ++pos;
      while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos;
    }
  }
  std::int64_t offset_seconds = 0;
  if (pos < s.size()) {
    const char z = s[pos];
    if (z == 'Z' || z == 'z') {
      ++pos;
    } else if (z == '+' || z == '-') {
      int oh = 0, om = 0;
      if (s.size() < pos + 6 || s[pos + 3] != ':' || !detail::parse_int(s.substr(pos + 1, 2), oh) ||
          !detail::parse_int(s.substr(pos + 4, 2), om))
        throw bad();
      offset_seconds = (z == '+' ? 1 : -1) * (oh * 3600 + om * 60);
      pos += 6;
    }
    if (pos != s.size()) throw bad();
  }
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || se > 60) throw bad();
  const auto days = sys_days{ymd}.time_since_epoch().count();
  return static_cast<std::int64_t>(days) * 86400 + h * 3600 + mi * 60 + se - offset_seconds;
}

/// `YYYY-MM-DDTHH:MM:SSZ`.
inline std::string format_timestamp(std::int64_t epoch) {
  using namespace std::chrono;
  const auto day_count = epoch >= 0 ? epoch / 86400 : -((-epoch + 86399) / 86400);
  const std::int64_t rem = epoch - day_count * 86400;
  const year_month_day ymd{sys_days{days{day_count}}};
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02lld:%02lld:%02lldZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<long long>(rem / 3600), static_cast<long long>((rem % 3600) / 60),
                static_cast<long long>(rem % 60));
  return buf;
}

/// Parsed CSV placed on its uniform grid.
struct CsvSeries {
  TimeSeries series;
  /// Grid points absent from the file (now MISSING).
  std::size_t materialized = 0;
};

/// Reads `timestamp,value` rows. The grid step is the most common spacing;
/// absent grid timestamps and empty value fields become MISSING. A header row is optional.
inline CsvSeries read_series_csv(std::istream& in) {
  std::map<std::int64_t, double> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view sv = detail::trim(line);
    if (sv.empty()) continue;
    const auto comma = sv.find(',');
    if (comma == std::string_view::npos)
      throw Error(ErrorKind::MalformedCsv, "line " + std::to_string(line_no) + ": expected two columns");
    const std::string_view ts_field = detail::trim(sv.substr(0, comma));
    std::string_view value_field = detail::trim(sv.substr(comma + 1));
    if (line_no == 1 && (ts_field == "timestamp" || ts_field == "time")) continue;
    if (value_field.find(',') != std::string_view::npos)
      throw Error(ErrorKind::MalformedCsv, "line " + std::to_string(line_no) + ": too many columns");
    const std::int64_t ts = parse_timestamp(ts_field);
    double value = kMissing;
    if (!value_field.empty() && !detail::parse_double(value_field, value))
      throw Error(ErrorKind::MalformedCsv, "line " + std::to_string(line_no) + ": bad value");
    rows[ts] = value;
  }
  if (rows.empty()) throw Error(ErrorKind::MalformedCsv, "no data rows");

  std::int64_t step = 0;
  if (rows.size() >= 2) {
    std::map<std::int64_t, std::size_t> spacing;
    for (auto it = std::next(rows.begin()); it != rows.end(); ++it) ++spacing[it->first - std::prev(it)->first];
    std::size_t best = 0;
    for (const auto& [gap, count] : spacing)
      if (count > best) best = count, step = gap;
  } else {
    step = 3600;
  }
  const std::int64_t start = rows.begin()->first;
  const std::int64_t span = rows.rbegin()->first - start;
  for (const auto& [ts, v] : rows)
    if ((ts - start) % step != 0)
      throw Error(ErrorKind::MalformedCsv, "timestamp " + std::to_string(ts) + " is off the inferred grid");
  std::vector<double> values(static_cast<std::size_t>(span / step) + 1, kMissing);
  for (const auto& [ts, v] : rows) values[static_cast<std::size_t>((ts - start) / step)] = v;
  const std::size_t materialized = values.size() - rows.size();
  return {TimeSeries(start, step, std::move(values)), materialized};
}

inline CsvSeries read_series_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
  return read_series_csv(in);
}

}  // namespace autoad
