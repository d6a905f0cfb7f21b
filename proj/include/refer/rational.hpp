#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace refer {

/// Exact rational number with a normalized int64 representation
/// (denominator > 0, gcd(num, den) == 1). Arithmetic is carried out in
/// 128-bit intermediates and throws std::overflow_error when the reduced
/// result does not fit.
///
/// Scores, human annotations and prices are all held as Rational so that
/// means and cost sums are exact; conversion to double happens only at
/// the reporting edge.
class Rational {
public:
    constexpr Rational() = default;
    Rational(std::int64_t value) : num_(value) {}  // NOLINT: implicit by intent
    Rational(std::int64_t num, std::int64_t den);

    /// Parses "12", "-3.25", "1e-3", "47/20". Returns nullopt on anything else.
    static std::optional<Rational> parse(std::string_view text);

    /// Shortest round-trip decimal of `value`, read back exactly.
    static Rational from_double(double value);

    std::int64_t num() const { return num_; }
    std::int64_t den() const { return den_; }
    bool is_integer() const { return den_ == 1; }

    double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }

    /// Exact decimal when the expansion terminates ("2.35"), else "p/q".
    std::string to_string() const;

    /// Rounds half away from zero.
    Rational round() const;
    Rational abs() const { return num_ < 0 ? Rational(-num_, den_) : *this; }

    friend Rational operator+(const Rational& a, const Rational& b);
    friend Rational operator-(const Rational& a, const Rational& b);
    friend Rational operator*(const Rational& a, const Rational& b);
    friend Rational operator/(const Rational& a, const Rational& b);
    Rational operator-() const { return Rational(-num_, den_); }
    Rational& operator+=(const Rational& o) { return *this = *this + o; }
    Rational& operator-=(const Rational& o) { return *this = *this - o; }

    friend bool operator==(const Rational& a, const Rational& b) = default;
    friend std::strong_ordering operator<=>(const Rational& a, const Rational& b);

private:
    std::int64_t num_ = 0;
    std::int64_t den_ = 1;
};

}  // namespace refer
