#pragma once

#include <array>
#include <map>

#include "flowcurv/expr.hpp"

namespace flowcurv {

using Monomial = std::array<unsigned, 3>;

/// Expanded polynomial in x, y, z with numeric coefficients.
class Polynomial {
 public:
  Polynomial() = default;

  /// Expands `e`. Throws std::invalid_argument if `e` still contains a
  /// symbolic parameter; bind parameters with substitute_parameters first.
  static Polynomial expand(const Expr& e);

  const std::map<Monomial, double>& terms() const { return terms_; }
  double coefficient(const Monomial& m) const;
  unsigned degree() const;

  /// Drops terms with |coefficient| <= tol.
  void prune(double tol);

  Expr to_expr() const;

  Polynomial& operator+=(const Polynomial& o);
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b);

 private:
  std::map<Monomial, double> terms_;
};

}  // namespace flowcurv
