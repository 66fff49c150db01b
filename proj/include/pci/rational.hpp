#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <cstdint>
#include <iomanip>
#include <sstream>
#include <string>
#include <string_view>

#include "pci/error.hpp"

namespace pci {

/// Exact arbitrary-precision rational. All probabilities read from theory
/// files and joint-table fixtures are representable exactly (fractions and
/// decimal strings alike), so the default computation mode is exact.
using Rat = boost::multiprecision::cpp_rational;

inline double to_double(const Rat& r) { return r.convert_to<double>(); }
inline double to_double(double d) { return d; }

/// Parses "p/q", "0.75", "1", ".5" into an exact rational.
inline Rat parse_probability(std::string_view text) {
  std::string s(text);
  if (s.empty()) throw Error("empty probability");
  auto slash = s.find('/');
  if (slash != std::string::npos) {
    std::string num = s.substr(0, slash);
    std::string den = s.substr(slash + 1);
    if (num.empty() || den.empty()) throw Error("malformed fraction '" + s + "'");
    try {
      boost::multiprecision::cpp_int n(num), d(den);
      return Rat(n, d);
    } catch (const std::exception&) {
      throw Error("malformed fraction '" + s + "'");
    }
  }
  auto dot = s.find('.');
  try {
    if (dot == std::string::npos) return Rat(boost::multiprecision::cpp_int(s));
    std::string whole = s.substr(0, dot);
    std::string frac = s.substr(dot + 1);
    if (frac.empty()) throw Error("malformed decimal '" + s + "'");
    bool negative = !whole.empty() && whole[0] == '-';
    if (negative) whole = whole.substr(1);
    if (whole.empty()) whole = "0";
    boost::multiprecision::cpp_int scale = 1;
    for (char c : frac) {
      if (c < '0' || c > '9') throw Error("malformed decimal '" + s + "'");
      scale *= 10;
    }
    Rat r = Rat(boost::multiprecision::cpp_int(whole)) +
            Rat(boost::multiprecision::cpp_int(frac), scale);
    return negative ? -r : r;
  } catch (const Error&) {
    throw;
  } catch (const std::exception&) {
    throw Error("malformed number '" + s + "'");
  }
}

/// "27/34" for proper fractions, "1" for integers.
inline std::string format_rational(const Rat& r) {
  if (denominator(r) == 1) return numerator(r).str();
  return numerator(r).str() + "/" + denominator(r).str();
}

/// Scalar policy for the two computation modes. Rational mode checks
/// distribution sums exactly; floating-point mode uses the 1e-9 tolerance.
template <class P>
struct prob_traits;

template <>
struct prob_traits<double> {
  static double zero() { return 0.0; }
  static double one() { return 1.0; }
  static double from_rational(const Rat& r) { return to_double(r); }
  static bool sum_is_one(double s) { return std::abs(s - 1.0) <= 1e-9; }
  static std::string to_string(double p) {
    std::ostringstream os;
    os << std::setprecision(17) << p;
    return os.str();
  }
};

template <>
struct prob_traits<Rat> {
  static Rat zero() { return Rat(0); }
  static Rat one() { return Rat(1); }
  static Rat from_rational(const Rat& r) { return r; }
  static bool sum_is_one(const Rat& s) { return s == 1; }
  static std::string to_string(const Rat& p) { return format_rational(p); }
};

}  // namespace pci
