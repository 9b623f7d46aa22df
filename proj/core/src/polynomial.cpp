#include "flowcurv/polynomial.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace flowcurv {

double Polynomial::coefficient(const Monomial& m) const {
  auto it = terms_.find(m);
  return it == terms_.end() ? 0.0 : it->second;
}

unsigned Polynomial::degree() const {
  unsigned d = 0;
  for (const auto& [m, c] : terms_) d = std::max(d, m[0] + m[1] + m[2]);
  return d;
}

void Polynomial::prune(double tol) {
  std::erase_if(terms_, [tol](const auto& kv) { return std::abs(kv.second) <= tol; });
}

Polynomial& Polynomial::operator+=(const Polynomial& o) {
  for (const auto& [m, c] : o.terms_) terms_[m] += c;
  std::erase_if(terms_, [](const auto& kv) { return kv.second == 0.0; });
  return *this;
}

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
  Polynomial r;
  for (const auto& [ma, ca] : a.terms_)
    for (const auto& [mb, cb] : b.terms_) {
      Monomial m{ma[0] + mb[0], ma[1] + mb[1], ma[2] + mb[2]};
      r.terms_[m] += ca * cb;
    }
  std::erase_if(r.terms_, [](const auto& kv) { return kv.second == 0.0; });
  return r;
}

Polynomial Polynomial::expand(const Expr& e) {
  std::unordered_map<const Node*, Polynomial> memo;
  auto go = [&](auto&& self, const Expr& x) -> Polynomial {
    if (auto it = memo.find(x.id()); it != memo.end()) return it->second;
    Polynomial p;
    switch (x.kind()) {
      case NodeKind::Constant:
        if (x.constant_value() != 0.0) p.terms_[{0, 0, 0}] = x.constant_value();
        break;
      case NodeKind::Variable: {
        Monomial m{0, 0, 0};
        m[x.variable_index()] = 1;
        p.terms_[m] = 1.0;
        break;
      }
      case NodeKind::Parameter:
        throw std::invalid_argument("cannot expand: parameter '" + x.parameter_name() + "' is unbound");
      case NodeKind::Sum:
        for (const auto& c : x.children()) p += self(self, c);
        break;
      case NodeKind::Product:
        p.terms_[{0, 0, 0}] = 1.0;
        for (const auto& c : x.children()) p = p * self(self, c);
        break;
      case NodeKind::Negate:
        p = self(self, x.children()[0]);
        for (auto& [m, c] : p.terms_) c = -c;
        break;
      case NodeKind::Power: {
        Polynomial base = self(self, x.children()[0]);
        p.terms_[{0, 0, 0}] = 1.0;
        for (unsigned k = 0; k < x.exponent(); ++k) p = p * base;
        break;
      }
    }
    memo.emplace(x.id(), p);
    return p;
  };
  return go(go, e);
}

Expr Polynomial::to_expr() const {
  std::vector<Expr> terms;
  // Highest degree first reads naturally; std::map order is lexicographic.
  std::vector<std::pair<Monomial, double>> sorted(terms_.begin(), terms_.end());
  std::stable_sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    return a.first[0] + a.first[1] + a.first[2] > b.first[0] + b.first[1] + b.first[2];
  });
  for (const auto& [m, c] : sorted) {
    std::vector<Expr> factors{Expr::constant(c)};
    for (int v = 0; v < 3; ++v)
      if (m[v] > 0) factors.push_back(pow(Expr::variable(v), m[v]));
    terms.push_back(Expr::product(std::move(factors)));
  }
  return Expr::sum(std::move(terms));
}

}  // namespace flowcurv
