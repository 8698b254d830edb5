#include "slimnet/reg/rational.hpp"

#include <cctype>
#include <numeric>

#include "slimnet/errors.hpp"

namespace slimnet {

namespace {

std::uint64_t parse_digits(const std::string& s, const std::string& whole) {
  if (s.empty() || s.size() > 18) throw ConfigError("invalid rational '" + whole + "'");
  std::uint64_t v = 0;
  for (char ch : s) {
    if (!std::isdigit(static_cast<unsigned char>(ch))) throw ConfigError("invalid rational '" + whole + "'");
    v = v * 10 + static_cast<std::uint64_t>(ch - '0');
  }
  return v;
}

Rational reduced(std::uint64_t num, std::uint64_t den) {
  const std::uint64_t g = std::gcd(num, den);
  return g ? Rational{num / g, den / g} : Rational{0, 1};
}

}  // namespace

Rational Rational::parse(const std::string& text) {
  std::string t;
  for (char ch : text)
    if (!std::isspace(static_cast<unsigned char>(ch))) t.push_back(ch);
  if (const auto slash = t.find('/'); slash != std::string::npos) {
    const std::uint64_t num = parse_digits(t.substr(0, slash), text);
    const std::uint64_t den = parse_digits(t.substr(slash + 1), text);
    if (den == 0) throw ConfigError("rational '" + text + "' has a zero denominator");
    return reduced(num, den);
  }
  if (const auto dot = t.find('.'); dot != std::string::npos) {
    const std::string frac = t.substr(dot + 1);
    const std::string digits = t.substr(0, dot) + frac;
    std::uint64_t den = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
    return reduced(parse_digits(digits.empty() ? "0" : digits, text), den);
  }
  return reduced(parse_digits(t, text), 1);
}

std::string Rational::str() const {
  if (den == 1) return std::to_string(num);
  return std::to_string(num) + "/" + std::to_string(den);
}

std::size_t Rational::floor_times(std::size_t n) const {
  return static_cast<std::size_t>((static_cast<unsigned __int128>(num) * n) / den);
}

}  // namespace slimnet
