#include "peierls/configuration.hpp"

#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>

#include "peierls/error.hpp"
#include "peierls/generating.hpp"

namespace peierls {
namespace {

long parse_long(const std::string& text, const std::string& whole) {
  long value = 0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw Error(ErrorKind::InvalidArgument, "malformed rotation symbol '" + whole + "'");
  }
  return value;
}

}  // namespace

double Configuration::at(long i) const {
  if (const auto* per = std::get_if<Periodic>(&boundary)) {
    const long local = i - index_offset;
    const long q = per->q;
    long wraps = local / q;
    long r = local % q;
    if (r < 0) {
      r += q;
      --wraps;
    }
    return values[static_cast<std::size_t>(r)] + static_cast<double>(wraps * per->p);
  }
  if (i < first_index() || i > last_index()) {
    throw Error(ErrorKind::InvalidArgument, "configuration index out of range");
  }
  return values[static_cast<std::size_t>(i - index_offset)];
}

RotationSymbol RotationSymbol::rational(long p, long q, SymbolVariant variant) {
  if (q <= 0) throw Error(ErrorKind::InvalidArgument, "rotation symbol needs q > 0");
  if (std::gcd(p, q) != 1) {
    throw Error(ErrorKind::InvalidArgument, "rotation symbol p/q must be in lowest terms");
  }
  RotationSymbol s;
  s.kind = Kind::Rational;
  s.p = p;
  s.q = q;
  s.variant = variant;
  s.omega = static_cast<double>(p) / static_cast<double>(q);
  return s;
}

RotationSymbol RotationSymbol::irrational(double omega) {
  if (!std::isfinite(omega) || looks_rational(omega)) {
    std::ostringstream os;
    os.precision(17);
    os << "rational input: omega = " << omega;
    throw Error(ErrorKind::RationalInput, os.str());
  }
  RotationSymbol s;
  s.kind = Kind::Irrational;
  s.omega = omega;
  s.p = 0;
  s.q = 0;
  return s;
}

RotationSymbol RotationSymbol::parse(const std::string& text) {
  if (text.empty()) throw Error(ErrorKind::InvalidArgument, "empty rotation symbol");
  std::string body = text;
  SymbolVariant variant = SymbolVariant::Exact;
  if (body.size() > 1 && (body.back() == '+' || body.back() == '-')) {
    variant = body.back() == '+' ? SymbolVariant::Plus : SymbolVariant::Minus;
    body.pop_back();
  }
  const auto slash = body.find('/');
  if (slash != std::string::npos) {
    return rational(parse_long(body.substr(0, slash), text), parse_long(body.substr(slash + 1), text),
                    variant);
  }
  if (body.find_first_of(".eE") == std::string::npos) {
    return rational(parse_long(body, text), 1, variant);
  }
  if (variant != SymbolVariant::Exact) {
    throw Error(ErrorKind::InvalidArgument, "irrational symbols take no +/- variant: '" + text + "'");
  }
  std::size_t used = 0;
  double omega = 0.0;
  try {
    omega = std::stod(body, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != body.size()) throw Error(ErrorKind::InvalidArgument, "malformed rotation symbol '" + text + "'");
  return irrational(omega);
}

std::string RotationSymbol::to_string() const {
  std::ostringstream os;
  if (kind == Kind::Irrational) {
    os.precision(17);
    os << omega;
    return os.str();
  }
  if (q == 1) {
    os << p;
  } else {
    os << p << '/' << q;
  }
  if (variant == SymbolVariant::Plus) os << '+';
  if (variant == SymbolVariant::Minus) os << '-';
  return os.str();
}

}  // namespace peierls
