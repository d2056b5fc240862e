#pragma once

#include <compare>
#include <string>
#include <string_view>

namespace hrplab {

/// A calendar month. Stored as a single ordinal (year * 12 + month - 1) so
/// consecutive months differ by exactly one.
class Month {
public:
    constexpr Month() = default;
    constexpr Month(int year, int month) : ordinal_(year * 12 + (month - 1)) {}

    static constexpr Month from_ordinal(int ordinal) {
        Month m;
        m.ordinal_ = ordinal;
        return m;
    }

    /// Parses strict `YYYY-MM`. Throws DataError on anything else.
    static Month parse(std::string_view text);

    constexpr int year() const { return ordinal_ / 12; }
    constexpr int month() const { return ordinal_ % 12 + 1; }
    constexpr int ordinal() const { return ordinal_; }

    std::string str() const;

    constexpr Month operator+(int months) const { return from_ordinal(ordinal_ + months); }
    constexpr Month operator-(int months) const { return from_ordinal(ordinal_ - months); }
    constexpr int operator-(Month other) const { return ordinal_ - other.ordinal_; }

    constexpr auto operator<=>(const Month&) const = default;

private:
    int ordinal_ = 0;
};

}  // namespace hrplab
