#pragma once

#include <gmpxx.h>

#include <optional>
#include <string>
#include <vector>

namespace reachrl {

/// Exact probabilities and values are arbitrary-precision rationals.
/// mpq_class keeps the canonical form we rely on: denominator > 0,
/// numerator/denominator coprime.
using Rational = mpq_class;
using Integer = mpz_class;

/// Parses a probability literal: either "p/q" or a finite decimal
/// ("0.5", "1", ".25", "1e-3" is NOT accepted). Decimals convert
/// exactly, e.g. 0.125 -> 1/8. Returns nullopt on malformed input.
std::optional<Rational> parse_probability(const std::string& text);

/// Canonical text form: "p/q" in lowest terms, or just "p" when q == 1.
std::string format_rational(const Rational& value);

/// Renders a rational as an exact finite decimal when the reduced
/// denominator is of the form 2^a * 5^b ("1/2" -> "0.5"); otherwise
/// falls back to format_rational.
std::string format_rational_decimal(const Rational& value);

double to_double(const Rational& value);

/// Least common multiple of the reduced denominators of a list of rationals.
Integer denominator_lcm(const std::vector<Rational>& values);

} // namespace reachrl
