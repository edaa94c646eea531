#include "hazefuse/timeutil.hpp"

#include <cstdio>

#include "hazefuse/error.hpp"

namespace hazefuse {

namespace {

// Days since 1970-01-01 for a Gregorian civil date (Hinnant's algorithm).
std::int64_t days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

struct Civil {
  int year, month, day;
};

Civil civil_from_days(std::int64_t z) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp + (mp < 10 ? 3 : -9);
  return {static_cast<int>(y + (m <= 2)), static_cast<int>(m), static_cast<int>(d)};
}

int days_in_month(int year, int month) {
  static const int lengths[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (month == 2 && TimeStamp::is_leap_year(year)) return 29;
  return lengths[month - 1];
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

std::int64_t floor_mod(std::int64_t a, std::int64_t b) { return a - floor_div(a, b) * b; }

}  // namespace

bool TimeStamp::is_leap_year(int year) {
  return (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
}

TimeStamp TimeStamp::from_utc(int year, int month, int day, int hour, int minute, int second) {
  if (month < 1 || month > 12 || day < 1 || day > days_in_month(year, month) || hour < 0 ||
      hour > 23 || minute < 0 || minute > 59 || second < 0 || second > 59) {
    raise(ErrorCode::DomainError, "invalid UTC civil time");
  }
  const std::int64_t days = days_from_civil(year, month, day);
  return TimeStamp(days * 86400 + hour * 3600 + minute * 60 + second);
}

TimeStamp TimeStamp::parse_iso8601(const std::string& text) {
  int y, mo, d, h, mi, s;
  char sep, tail;
  const int n = std::sscanf(text.c_str(), "%d-%2d-%2d%c%2d:%2d:%2d%c", &y, &mo, &d, &sep, &h, &mi,
                            &s, &tail);
  if (n < 7 || (sep != 'T' && sep != ' ') || (n == 8 && tail != 'Z')) {
    raise(ErrorCode::MalformedRecord, "bad ISO-8601 timestamp: '" + text + "'");
  }
  try {
    return from_utc(y, mo, d, h, mi, s);
  } catch (const Error&) {
    raise(ErrorCode::MalformedRecord, "bad ISO-8601 timestamp: '" + text + "'");
  }
}

std::string TimeStamp::to_iso8601() const {
  const std::int64_t days = floor_div(seconds_, 86400);
  const std::int64_t sod = floor_mod(seconds_, 86400);
  const Civil c = civil_from_days(days);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02lld:%02lld:%02lldZ", c.year, c.month, c.day,
                static_cast<long long>(sod / 3600), static_cast<long long>((sod / 60) % 60),
                static_cast<long long>(sod % 60));
  return buf;
}

int TimeStamp::day_of_year() const {
  const Civil c = civil_from_days(floor_div(seconds_, 86400));
  return static_cast<int>(floor_div(seconds_, 86400) - days_from_civil(c.year, 1, 1)) + 1;
}

double TimeStamp::time_of_day() const {
  return static_cast<double>(floor_mod(seconds_, 86400)) / 3600.0;
}

int TimeStamp::year() const { return civil_from_days(floor_div(seconds_, 86400)).year; }

}  // namespace hazefuse
