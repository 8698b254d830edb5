#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace slimnet {

// Exact non-negative fraction, kept in lowest terms. Zero ratios are given
// as rationals so zero counts never drift through floating point.
struct Rational {
  std::uint64_t num = 0;
  std::uint64_t den = 1;

  static Rational parse(const std::string& text);  // "1/8", "3", "0.125"

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  std::string str() const;

  // floor(this * n), exact.
  std::size_t floor_times(std::size_t n) const;

  friend bool operator==(const Rational& a, const Rational& b) { return a.num * b.den == b.num * a.den; }
  friend bool operator<(const Rational& a, const Rational& b) { return a.num * b.den < b.num * a.den; }
};

}  // namespace slimnet
