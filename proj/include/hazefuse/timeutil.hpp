#pragma once

#include <cstdint>
#include <string>

namespace hazefuse {

/// UTC instant with second resolution.
///
/// Stored as seconds since the Unix epoch; all calendar accessors use the
/// proleptic Gregorian calendar. No timezone or DST handling anywhere.
class TimeStamp {
 public:
  TimeStamp() = default;
  explicit TimeStamp(std::int64_t unix_seconds) : seconds_(unix_seconds) {}

  /// Builds from a UTC civil date/time. Throws DomainError on an invalid date.
  static TimeStamp from_utc(int year, int month, int day, int hour, int minute, int second);

  /// Parses `YYYY-MM-DDThh:mm:ssZ` (trailing Z optional, 'T' or space
  /// separator). Throws MalformedRecord on anything else.
  static TimeStamp parse_iso8601(const std::string& text);

  std::string to_iso8601() const;

  std::int64_t unix_seconds() const { return seconds_; }

  /// 1-based day of year, 366 only in leap years.
  int day_of_year() const;

  /// UTC hours in [0, 24).
  double time_of_day() const;

  int year() const;

  static bool is_leap_year(int year);

  friend bool operator==(const TimeStamp& a, const TimeStamp& b) { return a.seconds_ == b.seconds_; }
  friend auto operator<=>(const TimeStamp& a, const TimeStamp& b) { return a.seconds_ <=> b.seconds_; }

 private:
  std::int64_t seconds_ = 0;
};

}  // namespace hazefuse
