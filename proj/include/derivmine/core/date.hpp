#pragma once

#include <compare>
#include <optional>
#include <string>
#include <string_view>

namespace derivmine {

// Proleptic Gregorian calendar date, ISO-8601 "YYYY-MM-DD" on the wire.
struct Date {
  int year = 1970;
  int month = 1;
  int day = 1;

  auto operator<=>(const Date&) const = default;

  static std::optional<Date> parse(std::string_view iso);
  std::string to_string() const;
};

}  // namespace derivmine
