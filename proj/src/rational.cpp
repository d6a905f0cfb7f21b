#include "refer/rational.hpp"

#include <charconv>
#include <cmath>
#include <cctype>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace refer {
namespace {

using i128 = __int128;

i128 gcd128(i128 a, i128 b) {
    if (a < 0) a = -a;
    if (b < 0) b = -b;
    while (b != 0) {
        i128 t = a % b;
        a = b;
        b = t;
    }
    return a;
}

Rational make(i128 num, i128 den) {
    if (den == 0) throw std::domain_error("rational: zero denominator");
    if (den < 0) {
        num = -num;
        den = -den;
    }
    const i128 g = gcd128(num, den);
    if (g > 1) {
        num /= g;
        den /= g;
    }
    constexpr i128 lo = std::numeric_limits<std::int64_t>::min();
    constexpr i128 hi = std::numeric_limits<std::int64_t>::max();
    if (num < lo || num > hi || den > hi) throw std::overflow_error("rational: overflow");
    return Rational(static_cast<std::int64_t>(num), static_cast<std::int64_t>(den));
}

std::string to_decimal_digits(i128 v) {
    if (v == 0) return "0";
    std::string out;
    while (v > 0) {
        out.insert(out.begin(), static_cast<char>('0' + static_cast<int>(v % 10)));
        v /= 10;
    }
    return out;
}

}  // namespace

Rational::Rational(std::int64_t num, std::int64_t den) {
    if (den == 0) throw std::domain_error("rational: zero denominator");
    i128 n = num, d = den;
    if (d < 0) {
        n = -n;
        d = -d;
    }
    const i128 g = gcd128(n, d);
    if (g > 1) {
        n /= g;
        d /= g;
    }
    if (n > std::numeric_limits<std::int64_t>::max() || d > std::numeric_limits<std::int64_t>::max())
        throw std::overflow_error("rational: overflow");
    num_ = static_cast<std::int64_t>(n);
    den_ = static_cast<std::int64_t>(d);
}

std::optional<Rational> Rational::parse(std::string_view text) {
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
    if (text.empty()) return std::nullopt;

    if (auto slash = text.find('/'); slash != std::string_view::npos) {
        std::int64_t p = 0, q = 0;
        auto lhs = text.substr(0, slash);
        auto rhs = text.substr(slash + 1);
        auto r1 = std::from_chars(lhs.data(), lhs.data() + lhs.size(), p);
        auto r2 = std::from_chars(rhs.data(), rhs.data() + rhs.size(), q);
        if (r1.ec != std::errc{} || r1.ptr != lhs.data() + lhs.size()) return std::nullopt;
        if (r2.ec != std::errc{} || r2.ptr != rhs.data() + rhs.size() || q == 0) return std::nullopt;
        return Rational(p, q);
    }

    std::size_t i = 0;
    bool negative = false;
    if (text[i] == '+' || text[i] == '-') {
        negative = text[i] == '-';
        ++i;
    }
    i128 mantissa = 0;
    int scale = 0;
    bool any_digit = false;
    bool seen_dot = false;
    constexpr i128 cap = static_cast<i128>(1) << 100;
    for (; i < text.size(); ++i) {
        const char c = text[i];
        if (std::isdigit(static_cast<unsigned char>(c))) {
            any_digit = true;
            if (mantissa > cap) return std::nullopt;
            mantissa = mantissa * 10 + (c - '0');
            if (seen_dot) ++scale;
        } else if (c == '.' && !seen_dot) {
            seen_dot = true;
        } else {
            break;
        }
    }
    if (!any_digit) return std::nullopt;
    int exponent = 0;
    if (i < text.size() && (text[i] == 'e' || text[i] == 'E')) {
        ++i;
        auto rest = text.substr(i);
        if (!rest.empty() && rest.front() == '+') rest.remove_prefix(1);
        auto r = std::from_chars(rest.data(), rest.data() + rest.size(), exponent);
        if (r.ec != std::errc{} || r.ptr != rest.data() + rest.size()) return std::nullopt;
        if (exponent > 30 || exponent < -30) return std::nullopt;
        i = text.size();
    }
    if (i != text.size()) return std::nullopt;

    const int shift = exponent - scale;
    i128 num = negative ? -mantissa : mantissa;
    i128 den = 1;
    try {
        if (shift >= 0) {
            for (int k = 0; k < shift; ++k) {
                if (num > cap || num < -cap) return std::nullopt;
                num *= 10;
            }
        } else {
            for (int k = 0; k < -shift; ++k) den *= 10;
        }
        return make(num, den);
    } catch (const std::overflow_error&) {
        return std::nullopt;
    }
}

Rational Rational::from_double(double value) {
    if (!std::isfinite(value)) throw std::domain_error("rational: non-finite value");
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, value);
    auto parsed = parse(std::string_view(buf, static_cast<std::size_t>(res.ptr - buf)));
    if (!parsed) throw std::overflow_error("rational: value out of range");
    return *parsed;
}

std::string Rational::to_string() const {
    std::int64_t d = den_;
    int twos = 0, fives = 0;
    while (d % 2 == 0) {
        d /= 2;
        ++twos;
    }
    while (d % 5 == 0) {
        d /= 5;
        ++fives;
    }
    if (d != 1) return std::to_string(num_) + "/" + std::to_string(den_);

    const int digits = std::max(twos, fives);
    i128 scaled = num_;
    for (int k = 0; k < digits - twos; ++k) scaled *= 2;
    for (int k = 0; k < digits - fives; ++k) scaled *= 5;
    const bool negative = scaled < 0;
    std::string body = to_decimal_digits(negative ? -scaled : scaled);
    if (digits > 0) {
        if (static_cast<int>(body.size()) <= digits)
            body.insert(0, static_cast<std::size_t>(digits + 1) - body.size(), '0');
        body.insert(body.size() - static_cast<std::size_t>(digits), ".");
    }
    return negative ? "-" + body : body;
}

Rational Rational::round() const {
    if (den_ == 1) return *this;
    // floor(|x| + 1/2) with the sign restored
    const i128 a = num_ < 0 ? -static_cast<i128>(num_) : num_;
    const i128 r = (2 * a + den_) / (2 * static_cast<i128>(den_));
    return make(num_ < 0 ? -r : r, 1);
}

Rational operator+(const Rational& a, const Rational& b) {
    return make(static_cast<i128>(a.num_) * b.den_ + static_cast<i128>(b.num_) * a.den_,
                static_cast<i128>(a.den_) * b.den_);
}

Rational operator-(const Rational& a, const Rational& b) { return a + (-b); }

Rational operator*(const Rational& a, const Rational& b) {
    return make(static_cast<i128>(a.num_) * b.num_, static_cast<i128>(a.den_) * b.den_);
}

Rational operator/(const Rational& a, const Rational& b) {
    if (b.num_ == 0) throw std::domain_error("rational: division by zero");
    return make(static_cast<i128>(a.num_) * b.den_, static_cast<i128>(a.den_) * b.num_);
}

std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
    const i128 lhs = static_cast<i128>(a.num_) * b.den_;
    const i128 rhs = static_cast<i128>(b.num_) * a.den_;
    if (lhs < rhs) return std::strong_ordering::less;
    if (lhs > rhs) return std::strong_ordering::greater;
    return std::strong_ordering::equal;
}

}  // namespace refer
