#pragma once

#include <cmath>
#include <compare>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "../numerics/settings.hpp"

namespace prollout {

/// A cost in [0, +inf]. Addition saturates at infinity; values can never
/// be negative or NaN.
class ExtendedCost {
public:
    constexpr ExtendedCost() = default;

    explicit ExtendedCost(double v) : v_(v) {
        if (std::isnan(v) || v < 0.0)
            throw Error("ExtendedCost: value must be in [0, inf], got " + std::to_string(v));
    }

    static constexpr ExtendedCost infinity() {
        ExtendedCost c;
        c.v_ = std::numeric_limits<double>::infinity();
        return c;
    }

    /// Accepts solver output, clamping round-off negatives down to -tol.
    static ExtendedCost from_numeric(double v, double tol = 1e-9) {
        if (v < 0.0 && v >= -tol)
            return ExtendedCost{};
        return ExtendedCost(v);
    }

    [[nodiscard]] constexpr double value() const { return v_; }
    [[nodiscard]] constexpr bool is_finite() const { return v_ != std::numeric_limits<double>::infinity(); }
    [[nodiscard]] constexpr bool is_infinite() const { return !is_finite(); }

    friend ExtendedCost operator+(ExtendedCost a, ExtendedCost b) {
        ExtendedCost c;
        c.v_ = (a.is_infinite() || b.is_infinite()) ? std::numeric_limits<double>::infinity() : a.v_ + b.v_;
        return c;
    }
    ExtendedCost& operator+=(ExtendedCost o) { return *this = *this + o; }

    friend constexpr auto operator<=>(ExtendedCost a, ExtendedCost b) { return a.v_ <=> b.v_; }
    friend constexpr bool operator==(ExtendedCost a, ExtendedCost b) { return a.v_ == b.v_; }

    friend std::ostream& operator<<(std::ostream& os, ExtendedCost c) {
        if (c.is_infinite())
            return os << "inf";
        return os << c.v_;
    }

private:
    double v_ = 0.0;
};

inline ExtendedCost min(ExtendedCost a, ExtendedCost b) { return b < a ? b : a; }

inline std::string to_string(ExtendedCost c, int precision = 17) {
    if (c.is_infinite())
        return "inf";
    std::ostringstream os;
    os.precision(precision);
    os << c.value();
    return os.str();
}

/// Parses the portable encoding: a decimal number or "inf".
inline ExtendedCost parse_extended_cost(const std::string& s) {
    if (s == "inf" || s == "Infinity" || s == "+inf")
        return ExtendedCost::infinity();
    size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size())
        throw Error("parse_extended_cost: trailing characters in '" + s + "'");
    return ExtendedCost(v);
}

} // namespace prollout
