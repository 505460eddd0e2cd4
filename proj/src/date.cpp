#include "frictionbreak/date.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

#include "frictionbreak/error.hpp"

namespace frictionbreak {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"'))
    s.remove_suffix(1);
  return s;
}

bool parse_fixed(std::string_view s, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > s.size()) return false;
  for (std::size_t i = pos; i < pos + len; ++i)
    if (s[i] < '0' || s[i] > '9') return false;
  auto [p, ec] = std::from_chars(s.data() + pos, s.data() + pos + len, out);
  return ec == std::errc{} && p == s.data() + pos + len;
}

bool looks_like_epoch(std::string_view s) {
  if (s.empty()) return false;
  std::size_t i = (s[0] == '-' || s[0] == '+') ? 1 : 0;
  if (i == s.size()) return false;
  bool digit = false;
  bool dot = false;
  for (; i < s.size(); ++i) {
    if (s[i] >= '0' && s[i] <= '9') {
      digit = true;
    } else if (s[i] == '.' && !dot) {
      dot = true;
    } else {
      return false;
    }
  }
  return digit;
}

}  // namespace

Date Date::from_ymd(int year, unsigned month, unsigned day) {
  const std::chrono::year_month_day ymd{std::chrono::year{year}, std::chrono::month{month},
                                        std::chrono::day{day}};
  if (!ymd.ok()) throw InputError("invalid calendar date");
  return Date(static_cast<std::int32_t>(std::chrono::sys_days{ymd}.time_since_epoch().count()));
}

Date Date::from_epoch_seconds(std::int64_t seconds) {
  std::int64_t days = seconds / 86400;
  if (seconds % 86400 != 0 && seconds < 0) --days;
  return Date(static_cast<std::int32_t>(days));
}

Date Date::parse(std::string_view iso) {
  iso = trim(iso);
  int y = 0, m = 0, d = 0;
  if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-' || !parse_fixed(iso, 0, 4, y) ||
      !parse_fixed(iso, 5, 2, m) || !parse_fixed(iso, 8, 2, d))
    throw InputError("unparseable date '" + std::string(iso) + "'");
  return from_ymd(y, static_cast<unsigned>(m), static_cast<unsigned>(d));
}

std::chrono::year_month_day Date::ymd() const {
  return std::chrono::year_month_day{std::chrono::sys_days{std::chrono::days{days_}}};
}

std::string Date::to_string() const {
  const auto v = ymd();
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(v.year()),
                static_cast<unsigned>(v.month()), static_cast<unsigned>(v.day()));
  return buf;
}

std::int64_t parse_timestamp(std::string_view text) {
  const std::string_view s = trim(text);
  if (looks_like_epoch(s)) {
    const std::string_view digits = s[0] == '+' ? s.substr(1) : s;
    if (digits.find('.') == std::string_view::npos) {
      std::int64_t v = 0;
      auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
      if (ec == std::errc{} && p == digits.data() + digits.size()) return v;
    } else {
      double v = 0;
      auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
      if (ec == std::errc{} && p == digits.data() + digits.size() && std::isfinite(v))
        return static_cast<std::int64_t>(std::floor(v));
    }
    throw InputError("unparseable timestamp '" + std::string(s) + "'");
  }
  if (s.size() < 10) throw InputError("unparseable timestamp '" + std::string(s) + "'");
  const Date date = Date::parse(s.substr(0, 10));
  std::int64_t secs = date.epoch_seconds();
  if (s.size() == 10) return secs;

  std::string_view rest = s.substr(10);
  if (rest[0] != 'T' && rest[0] != ' ') throw InputError("unparseable timestamp '" + std::string(s) + "'");
  rest.remove_prefix(1);
  if (!rest.empty() && rest.back() == 'Z') rest.remove_suffix(1);
  int hh = 0, mm = 0, ss = 0;
  if (!parse_fixed(rest, 0, 2, hh) || rest.size() < 5 || rest[2] != ':' || !parse_fixed(rest, 3, 2, mm))
    throw InputError("unparseable timestamp '" + std::string(s) + "'");
  std::size_t pos = 5;
  if (rest.size() > pos && rest[pos] == ':') {
    if (!parse_fixed(rest, pos + 1, 2, ss)) throw InputError("unparseable timestamp '" + std::string(s) + "'");
    pos += 3;
    if (rest.size() > pos && rest[pos] == '.') {
      ++pos;
      while (pos < rest.size() && rest[pos] >= '0' && rest[pos] <= '9') ++pos;
    }
  }
  if (pos != rest.size() || hh > 23 || mm > 59 || ss > 60)
    throw InputError("unparseable timestamp '" + std::string(s) + "'");
  return secs + hh * 3600 + mm * 60 + ss;
}

}  // namespace frictionbreak
