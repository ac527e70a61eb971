#include "reachrl/rational.hpp"

#include <cctype>

namespace reachrl {

namespace {

bool all_digits(const std::string& s) {
    if (s.empty()) return false;
    for (char c : s) {
        if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    }
    return true;
}

} // namespace

std::optional<Rational> parse_probability(const std::string& text) {
    if (text.empty()) return std::nullopt;
    std::string body = text;
    bool negative = false;
    if (body[0] == '-') {
        negative = true;
        body = body.substr(1);
    } else if (body[0] == '+') {
        body = body.substr(1);
    }
    if (body.empty()) return std::nullopt;

    Rational result;
    auto slash = body.find('/');
    if (slash != std::string::npos) {
        std::string num = body.substr(0, slash);
        std::string den = body.substr(slash + 1);
        if (!all_digits(num) || !all_digits(den)) return std::nullopt;
        Integer d(den);
        if (d == 0) return std::nullopt;
        result = Rational(Integer(num), d);
    } else {
        auto dot = body.find('.');
        if (dot == std::string::npos) {
            if (!all_digits(body)) return std::nullopt;
            result = Rational(Integer(body));
        } else {
            std::string whole = body.substr(0, dot);
            std::string frac = body.substr(dot + 1);
            if (whole.empty() && frac.empty()) return std::nullopt;
            if (!whole.empty() && !all_digits(whole)) return std::nullopt;
            if (!frac.empty() && !all_digits(frac)) return std::nullopt;
            Integer numerator = whole.empty() ? Integer(0) : Integer(whole);
            Integer scale(1);
            for (size_t i = 0; i < frac.size(); ++i) scale *= 10;
            numerator *= scale;
            if (!frac.empty()) numerator += Integer(frac);
            result = Rational(numerator, scale);
        }
    }
    result.canonicalize();
    if (negative) result = -result;
    return result;
}

std::string format_rational(const Rational& value) {
    if (value.get_den() == 1) return value.get_num().get_str();
    return value.get_num().get_str() + "/" + value.get_den().get_str();
}

std::string format_rational_decimal(const Rational& value) {
    Integer den = value.get_den();
    unsigned twos = 0;
    unsigned fives = 0;
    while (den % 2 == 0) {
        den /= 2;
        ++twos;
    }
    while (den % 5 == 0) {
        den /= 5;
        ++fives;
    }
    if (den != 1) return format_rational(value);
    if (value.get_den() == 1) return value.get_num().get_str();

    // Scale so the denominator becomes a power of ten.
    unsigned digits = std::max(twos, fives);
    Integer pow10(1);
    for (unsigned i = 0; i < digits; ++i) pow10 *= 10;
    Integer scaled = value.get_num() * (pow10 / value.get_den());
    bool negative = scaled < 0;
    if (negative) scaled = -scaled;
    std::string body = scaled.get_str();
    if (body.size() <= digits) body.insert(0, digits + 1 - body.size(), '0');
    body.insert(body.size() - digits, ".");
    while (body.back() == '0') body.pop_back();
    if (body.back() == '.') body.pop_back();
    return negative ? "-" + body : body;
}

double to_double(const Rational& value) { return value.get_d(); }

Integer denominator_lcm(const std::vector<Rational>& values) {
    Integer acc(1);
    for (const auto& v : values) {
        Integer den = v.get_den();
        mpz_lcm(acc.get_mpz_t(), acc.get_mpz_t(), den.get_mpz_t());
    }
    return acc;
}

} // namespace reachrl
