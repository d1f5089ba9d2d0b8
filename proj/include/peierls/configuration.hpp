#pragma once

#include <string>
#include <variant>
#include <vector>

namespace peierls {

/// x_{i+q} = x_i + p; the configuration stores x_0 .. x_{q-1}.
struct Periodic {
  long p = 0;
  long q = 1;
  bool operator==(const Periodic&) const = default;
};

/// A finite segment whose first and last values are held fixed.
struct PinnedEnds {
  double left = 0.0;
  double right = 0.0;
  bool operator==(const PinnedEnds&) const = default;
};

/// A finite increasing segment climbing from (near) 0 to (near) 1.
struct Heteroclinic01 {
  bool operator==(const Heteroclinic01&) const = default;
};

using Boundary = std::variant<Periodic, PinnedEnds, Heteroclinic01>;

struct Configuration {
  std::vector<double> values;
  Boundary boundary = PinnedEnds{};
  /// Global orbit index of values[0].
  long index_offset = 0;

  bool is_periodic() const { return std::holds_alternative<Periodic>(boundary); }
  std::size_t size() const { return values.size(); }

  /// x at global index i. Periodic configurations extend to every i; finite
  /// ones require i inside [first_index(), last_index()].
  double at(long i) const;
  long first_index() const { return index_offset; }
  long last_index() const { return index_offset + static_cast<long>(values.size()) - 1; }
};

enum class SymbolVariant { Exact, Plus, Minus };

/// p/q, p/q+, p/q- or an irrational omega.
struct RotationSymbol {
  enum class Kind { Rational, Irrational };

  Kind kind = Kind::Rational;
  long p = 0;
  long q = 1;
  SymbolVariant variant = SymbolVariant::Exact;
  double omega = 0.0;

  static RotationSymbol rational(long p, long q, SymbolVariant variant = SymbolVariant::Exact);
  static RotationSymbol irrational(double omega);
  static RotationSymbol zero_plus() { return rational(0, 1, SymbolVariant::Plus); }

  /// Accepts "p/q", "p/q+", "p/q-", "0+", "0-", "1" or a decimal omega.
  static RotationSymbol parse(const std::string& text);
  std::string to_string() const;

  bool is_rational() const { return kind == Kind::Rational; }
  double value() const { return is_rational() ? static_cast<double>(p) / q : omega; }
};

struct SolveReport {
  double residual_inf = 0.0;
  int iterations = 0;
  bool converged = false;
  double action = 0.0;
  /// Largest distance of the segment ends from their asymptotic orbits
  /// (zero for periodic solves).
  double tail_distance = 0.0;
};

}  // namespace peierls
