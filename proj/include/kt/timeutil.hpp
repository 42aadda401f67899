#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace kt {

// Seconds since the Unix epoch, UTC.
using UtcSeconds = std::int64_t;

// Parses strict `YYYY-MM-DDThh:mm:ssZ`. Returns nullopt on any deviation.
std::optional<UtcSeconds> parse_iso8601(const std::string& s);

std::string format_iso8601(UtcSeconds t);

// Calendar month 1..12 of a UTC instant.
int utc_month(UtcSeconds t);

// Civil date <-> day count (days since 1970-01-01).
std::int64_t days_from_civil(int y, int m, int d);
void civil_from_days(std::int64_t z, int& y, int& m, int& d);

}  // namespace kt
