#pragma once

#include <cstdint>
#include <string>

namespace tempgen {

/// Hours since 1970-01-01T00:00Z.
using EpochHour = std::int64_t;

struct CivilHour {
  int year = 1970;
  unsigned month = 1;  // 1..12
  unsigned day = 1;    // 1..31
  unsigned hour = 0;   // 0..23
};

CivilHour to_civil(EpochHour h);
EpochHour to_epoch_hour(int year, unsigned month, unsigned day, unsigned hour = 0);
unsigned days_in_month(int year, unsigned month);

/// Accepts "YYYY-MM-DDTHH[:MM[:SS]][Z]"; minutes and seconds must be zero.
EpochHour parse_iso8601_hour(const std::string& text);
std::string format_iso8601_hour(EpochHour h);

}  // namespace tempgen
