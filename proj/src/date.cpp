#include "fincon/date.hpp"

#include <cctype>
#include <cstdio>

#include "fincon/errors.hpp"

namespace fincon {

namespace {

bool leap(int y) {
    return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
}

int days_in_month(int y, int m) {
    static const int base[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (m == 2 && leap(y)) return 29;
    return base[m - 1];
}

}  // namespace

bool valid_date(const Date& d) {
    if (d.year < 1 || d.month < 1 || d.month > 12) return false;
    return d.day >= 1 && d.day <= days_in_month(d.year, d.month);
}

Date parse_date(const std::string& text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-')
        throw MalformedRow("bad date '" + text + "': expected YYYY-MM-DD");
    for (int i : {0, 1, 2, 3, 5, 6, 8, 9}) {
        if (!std::isdigit(static_cast<unsigned char>(text[i])))
            throw MalformedRow("bad date '" + text + "': expected YYYY-MM-DD");
    }
    Date d;
    d.year = std::stoi(text.substr(0, 4));
    d.month = std::stoi(text.substr(5, 2));
    d.day = std::stoi(text.substr(8, 2));
    if (!valid_date(d))
        throw MalformedRow("invalid calendar date '" + text + "'");
    return d;
}

Date next_day(const Date& d) {
    Date n = d;
    if (d.day < days_in_month(d.year, d.month)) {
        ++n.day;
    } else if (d.month < 12) {
        ++n.month;
        n.day = 1;
    } else {
        ++n.year;
        n.month = 1;
        n.day = 1;
    }
    return n;
}

std::string to_string(const Date& d) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", d.year, d.month, d.day);
    return buf;
}

}  // namespace fincon
