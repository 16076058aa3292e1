#pragma once

#include <compare>
#include <string>

namespace fincon {

// Plain calendar date.  Only parsing, ordering and ISO-8601 formatting are
// needed; no arithmetic beyond day counts for sanity checks.
struct Date {
    int year = 0;
    int month = 0;
    int day = 0;

    auto operator<=>(const Date&) const = default;
};

// Strict "YYYY-MM-DD" parse with calendar validation (leap years included).
// Throws MalformedRow on anything else.
Date parse_date(const std::string& text);

bool valid_date(const Date& d);

Date next_day(const Date& d);

std::string to_string(const Date& d);

}  // namespace fincon
