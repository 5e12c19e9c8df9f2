#include "tempgen/calendar.hpp"

#include <chrono>
#include <cstdio>
#include <regex>

#include "tempgen/error.hpp"

namespace tempgen {

namespace {

EpochHour floor_div(EpochHour a, EpochHour b) { return a / b - ((a % b != 0) && ((a < 0) != (b < 0))); }

}  // namespace

CivilHour to_civil(EpochHour h) {
  using namespace std::chrono;
  const EpochHour days = floor_div(h, 24);
  const year_month_day ymd{sys_days{std::chrono::days{days}}};
  return {static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
          static_cast<unsigned>(h - days * 24)};
}

EpochHour to_epoch_hour(int year, unsigned month, unsigned day, unsigned hour) {
  using namespace std::chrono;
  const year_month_day ymd{std::chrono::year{year}, std::chrono::month{month}, std::chrono::day{day}};
  if (!ymd.ok() || hour > 23) {
    throw DataError("invalid calendar time " + std::to_string(year) + "-" + std::to_string(month) + "-" +
                    std::to_string(day) + " " + std::to_string(hour) + "h");
  }
  return static_cast<EpochHour>(sys_days{ymd}.time_since_epoch().count()) * 24 + hour;
}

unsigned days_in_month(int year, unsigned month) {
  using namespace std::chrono;
  const year_month_day_last last{std::chrono::year{year}, month_day_last{std::chrono::month{month}}};
  if (!last.ok()) throw DataError("invalid month " + std::to_string(month));
  return static_cast<unsigned>(last.day());
}

EpochHour parse_iso8601_hour(const std::string& text) {
  static const std::regex re(R"(^(\d{4})-(\d{2})-(\d{2})[T ](\d{2})(?::(\d{2})(?::(\d{2}))?)?(Z|\+00:00)?$)");
  std::smatch m;
  if (!std::regex_match(text, m, re)) throw DataError("malformed ISO-8601 time '" + text + "'");
  if ((m[5].matched && m[5] != "00") || (m[6].matched && m[6] != "00")) {
    throw DataError("time '" + text + "' is not on an hour boundary");
  }
  return to_epoch_hour(std::stoi(m[1]), static_cast<unsigned>(std::stoi(m[2])),
                       static_cast<unsigned>(std::stoi(m[3])), static_cast<unsigned>(std::stoi(m[4])));
}

std::string format_iso8601_hour(EpochHour h) {
  const CivilHour c = to_civil(h);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02u:00:00Z", c.year, c.month, c.day, c.hour);
  return buf;
}

}  // namespace tempgen
