#pragma once

#include <compare>
#include <string>
#include <string_view>

namespace lsm {

// Calendar date, ISO-8601 "YYYY-MM-DD" on the wire.
struct Date {
    int year = 0;
    int month = 1;
    int day = 1;

    auto operator<=>(const Date&) const = default;

    std::string to_string() const;
};

// Strict parse; throws Error(parse) on malformed or non-existent dates.
Date parse_date(std::string_view text);

bool is_valid_date(int year, int month, int day);

} // namespace lsm
