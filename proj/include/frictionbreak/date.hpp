#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace frictionbreak {

/// A UTC calendar date, stored as days since 1970-01-01.
class Date {
 public:
  constexpr Date() = default;
  constexpr explicit Date(std::int32_t days_since_epoch) : days_(days_since_epoch) {}

  static Date from_ymd(int year, unsigned month, unsigned day);
  /// Floor of a unix timestamp to its UTC day.
  static Date from_epoch_seconds(std::int64_t seconds);
  /// Accepts `YYYY-MM-DD`.
  static Date parse(std::string_view iso);

  constexpr std::int32_t days_since_epoch() const { return days_; }
  constexpr std::int64_t epoch_seconds() const { return std::int64_t{days_} * 86400; }
  std::chrono::year_month_day ymd() const;
  std::string to_string() const;

  constexpr Date operator+(std::int32_t days) const { return Date(days_ + days); }
  constexpr Date operator-(std::int32_t days) const { return Date(days_ - days); }
  constexpr std::int32_t operator-(Date other) const { return days_ - other.days_; }
  constexpr auto operator<=>(const Date&) const = default;

 private:
  std::int32_t days_ = 0;
};

/// Parses an ISO-8601 date or datetime (`YYYY-MM-DD`, `YYYY-MM-DDTHH:MM[:SS[.fff]][Z]`,
/// space separator allowed) or unix epoch seconds. Throws InputError on failure.
std::int64_t parse_timestamp(std::string_view text);

}  // namespace frictionbreak
