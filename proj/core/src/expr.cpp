#include "flowcurv/expr.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <stdexcept>
#include <unordered_map>

namespace flowcurv {

namespace {

std::shared_ptr<const Node> make_node(Node n) {
  return std::make_shared<const Node>(std::move(n));
}

double ipow(double base, unsigned n) {
  double result = 1.0;
  while (n != 0) {
    if (n & 1u) result *= base;
    base *= base;
    n >>= 1u;
  }
  return result;
}

// Shortest decimal text that reads back to the same double.
std::string format_number(double v) {
  char buf[64];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

}  // namespace

Expr::Expr() : node_(make_node(Node{})) {}

Expr Expr::constant(double value) {
  Node n;
  n.kind = NodeKind::Constant;
  n.value = value == 0.0 ? 0.0 : value;  // no negative zero
  return Expr(make_node(std::move(n)));
}

Expr Expr::variable(int index) {
  if (index < 0 || index > 2) throw std::invalid_argument("variable index must be 0, 1 or 2");
  Node n;
  n.kind = NodeKind::Variable;
  n.variable = index;
  return Expr(make_node(std::move(n)));
}

Expr Expr::parameter(std::string name) {
  if (name.empty()) throw std::invalid_argument("parameter name must be non-empty");
  Node n;
  n.kind = NodeKind::Parameter;
  n.name = std::move(name);
  return Expr(make_node(std::move(n)));
}

NodeKind Expr::kind() const { return node_->kind; }

bool Expr::is_constant(double v) const {
  return node_->kind == NodeKind::Constant && node_->value == v;
}

double Expr::constant_value() const {
  if (node_->kind != NodeKind::Constant) throw std::logic_error("not a constant");
  return node_->value;
}

int Expr::variable_index() const {
  if (node_->kind != NodeKind::Variable) throw std::logic_error("not a variable");
  return node_->variable;
}

const std::string& Expr::parameter_name() const {
  if (node_->kind != NodeKind::Parameter) throw std::logic_error("not a parameter");
  return node_->name;
}

std::span<const Expr> Expr::children() const { return node_->args; }

unsigned Expr::exponent() const {
  if (node_->kind != NodeKind::Power) throw std::logic_error("not a power");
  return node_->exponent;
}

std::size_t Expr::tree_size() const {
  std::size_t n = 1;
  for (const auto& c : node_->args) n += c.tree_size();
  return n;
}

std::vector<std::string> Expr::parameters() const {
  std::set<std::string> names;
  std::set<const Node*> seen;
  std::function<void(const Expr&)> walk = [&](const Expr& e) {
    if (!seen.insert(e.id()).second) return;
    if (e.kind() == NodeKind::Parameter) names.insert(e.parameter_name());
    for (const auto& c : e.children()) walk(c);
  };
  walk(*this);
  return {names.begin(), names.end()};
}

int Expr::max_variable() const {
  int best = -1;
  std::set<const Node*> seen;
  std::function<void(const Expr&)> walk = [&](const Expr& e) {
    if (!seen.insert(e.id()).second) return;
    if (e.kind() == NodeKind::Variable) best = std::max(best, e.variable_index());
    for (const auto& c : e.children()) walk(c);
  };
  walk(*this);
  return best;
}

Expr Expr::sum(std::vector<Expr> terms) {
  std::vector<Expr> flat;
  flat.reserve(terms.size());
  double folded = 0.0;
  std::function<void(const Expr&, bool)> add = [&](const Expr& t, bool negated) {
    switch (t.kind()) {
      case NodeKind::Constant:
        folded += negated ? -t.constant_value() : t.constant_value();
        return;
      case NodeKind::Sum:
        for (const auto& c : t.children()) add(c, negated);
        return;
      case NodeKind::Negate:
        add(t.children()[0], !negated);
        return;
      default:
        flat.push_back(negated ? negate(t) : t);
    }
  };
  for (const auto& t : terms) add(t, false);
  if (folded != 0.0) flat.push_back(constant(folded));
  if (flat.empty()) return constant(0.0);
  if (flat.size() == 1) return flat.front();
  Node n;
  n.kind = NodeKind::Sum;
  n.args = std::move(flat);
  return Expr(make_node(std::move(n)));
}

Expr Expr::product(std::vector<Expr> factors) {
  std::vector<Expr> flat;
  double coefficient = 1.0;
  std::function<void(const Expr&)> add = [&](const Expr& f) {
    switch (f.kind()) {
      case NodeKind::Constant:
        coefficient *= f.constant_value();
        return;
      case NodeKind::Product:
        for (const auto& c : f.children()) add(c);
        return;
      case NodeKind::Negate:
        coefficient = -coefficient;
        add(f.children()[0]);
        return;
      default:
        flat.push_back(f);
    }
  };
  for (const auto& f : factors) add(f);
  if (coefficient == 0.0) return constant(0.0);
  if (flat.empty()) return constant(coefficient);
  if (coefficient == -1.0) return negate(product(std::move(flat)));
  if (coefficient != 1.0) flat.insert(flat.begin(), constant(coefficient));
  if (flat.size() == 1) return flat.front();
  Node n;
  n.kind = NodeKind::Product;
  n.args = std::move(flat);
  return Expr(make_node(std::move(n)));
}

Expr Expr::negate(Expr e) {
  switch (e.kind()) {
    case NodeKind::Constant:
      return constant(-e.constant_value());
    case NodeKind::Negate:
      return e.children()[0];
    case NodeKind::Product:
      if (e.children()[0].is_constant()) {
        std::vector<Expr> f(e.children().begin(), e.children().end());
        f[0] = constant(-f[0].constant_value());
        return product(std::move(f));
      }
      break;
    default:
      break;
  }
  Node n;
  n.kind = NodeKind::Negate;
  n.args = {std::move(e)};
  return Expr(make_node(std::move(n)));
}

Expr Expr::power(Expr base, unsigned exponent) {
  if (exponent == 0) return constant(1.0);
  if (exponent == 1) return base;
  switch (base.kind()) {
    case NodeKind::Constant:
      return constant(ipow(base.constant_value(), exponent));
    case NodeKind::Power:
      return power(base.children()[0], base.exponent() * exponent);
    case NodeKind::Negate: {
      Expr p = power(base.children()[0], exponent);
      return exponent % 2 == 0 ? p : negate(p);
    }
    default:
      break;
  }
  Node n;
  n.kind = NodeKind::Power;
  n.exponent = exponent;
  n.args = {std::move(base)};
  return Expr(make_node(std::move(n)));
}

Expr operator+(const Expr& a, const Expr& b) { return Expr::sum({a, b}); }
Expr operator-(const Expr& a, const Expr& b) { return Expr::sum({a, Expr::negate(b)}); }
Expr operator*(const Expr& a, const Expr& b) { return Expr::product({a, b}); }
Expr operator-(const Expr& a) { return Expr::negate(a); }

Expr pow(const Expr& base, unsigned exponent) { return Expr::power(base, exponent); }

namespace {

struct DiffContext {
  int var;
  std::unordered_map<const Node*, Expr> memo;

  Expr operator()(const Expr& e) {
    if (auto it = memo.find(e.id()); it != memo.end()) return it->second;
    Expr d = compute(e);
    memo.emplace(e.id(), d);
    return d;
  }

  Expr compute(const Expr& e) {
    switch (e.kind()) {
      case NodeKind::Constant:
      case NodeKind::Parameter:
        return Expr::constant(0.0);
      case NodeKind::Variable:
        return Expr::constant(e.variable_index() == var ? 1.0 : 0.0);
      case NodeKind::Sum: {
        std::vector<Expr> terms;
        for (const auto& c : e.children()) terms.push_back((*this)(c));
        return Expr::sum(std::move(terms));
      }
      case NodeKind::Product: {
        auto f = e.children();
        std::vector<Expr> terms;
        for (std::size_t i = 0; i < f.size(); ++i) {
          Expr di = (*this)(f[i]);
          if (di.is_zero()) continue;
          std::vector<Expr> factors(f.begin(), f.end());
          factors[i] = di;
          terms.push_back(Expr::product(std::move(factors)));
        }
        return Expr::sum(std::move(terms));
      }
      case NodeKind::Negate:
        return Expr::negate((*this)(e.children()[0]));
      case NodeKind::Power: {
        const Expr& base = e.children()[0];
        Expr db = (*this)(base);
        if (db.is_zero()) return Expr::constant(0.0);
        const unsigned n = e.exponent();
        return Expr::product({Expr::constant(static_cast<double>(n)), pow(base, n - 1), db});
      }
    }
    throw std::logic_error("unhandled node kind");
  }
};

template <class Leaf>
Expr rebuild(const Expr& e, Leaf&& leaf, std::unordered_map<const Node*, Expr>& memo) {
  if (auto it = memo.find(e.id()); it != memo.end()) return it->second;
  Expr out;
  switch (e.kind()) {
    case NodeKind::Constant:
    case NodeKind::Variable:
    case NodeKind::Parameter:
      out = leaf(e);
      break;
    case NodeKind::Sum:
    case NodeKind::Product: {
      std::vector<Expr> args;
      for (const auto& c : e.children()) args.push_back(rebuild(c, leaf, memo));
      out = e.kind() == NodeKind::Sum ? Expr::sum(std::move(args)) : Expr::product(std::move(args));
      break;
    }
    case NodeKind::Negate:
      out = Expr::negate(rebuild(e.children()[0], leaf, memo));
      break;
    case NodeKind::Power:
      out = pow(rebuild(e.children()[0], leaf, memo), e.exponent());
      break;
  }
  memo.emplace(e.id(), out);
  return out;
}

}  // namespace

Expr diff(const Expr& e, int var) {
  if (var < 0 || var > 2) throw std::invalid_argument("variable index must be 0, 1 or 2");
  DiffContext ctx{var, {}};
  return ctx(e);
}

Expr substitute_variables(const Expr& e, const std::array<Expr, 3>& replacement) {
  std::unordered_map<const Node*, Expr> memo;
  return rebuild(
      e,
      [&](const Expr& leaf) {
        return leaf.kind() == NodeKind::Variable ? replacement[leaf.variable_index()] : leaf;
      },
      memo);
}

Expr substitute_parameters(const Expr& e, const std::map<std::string, double>& values) {
  std::unordered_map<const Node*, Expr> memo;
  return rebuild(
      e,
      [&](const Expr& leaf) {
        if (leaf.kind() == NodeKind::Parameter) {
          if (auto it = values.find(leaf.parameter_name()); it != values.end())
            return Expr::constant(it->second);
        }
        return leaf;
      },
      memo);
}

double evaluate(const Expr& e, const std::array<double, 3>& state, const ParamLookup& params) {
  switch (e.kind()) {
    case NodeKind::Constant:
      return e.constant_value();
    case NodeKind::Variable:
      return state[e.variable_index()];
    case NodeKind::Parameter: {
      auto it = params.find(e.parameter_name());
      if (it == params.end()) throw std::out_of_range("unbound parameter '" + e.parameter_name() + "'");
      return it->second;
    }
    case NodeKind::Sum: {
      double s = 0.0;
      for (const auto& c : e.children()) s += evaluate(c, state, params);
      return s;
    }
    case NodeKind::Product: {
      double p = 1.0;
      for (const auto& c : e.children()) p *= evaluate(c, state, params);
      return p;
    }
    case NodeKind::Negate:
      return -evaluate(e.children()[0], state, params);
    case NodeKind::Power:
      return ipow(evaluate(e.children()[0], state, params), e.exponent());
  }
  throw std::logic_error("unhandled node kind");
}

namespace {

constexpr int kPrecSum = 1;
constexpr int kPrecProduct = 2;
constexpr int kPrecUnary = 3;
constexpr int kPrecPower = 4;
constexpr int kPrecAtom = 5;

int precedence(const Expr& e) {
  switch (e.kind()) {
    case NodeKind::Constant:
      return e.constant_value() < 0 ? kPrecUnary : kPrecAtom;
    case NodeKind::Variable:
    case NodeKind::Parameter:
      return kPrecAtom;
    case NodeKind::Sum:
      return kPrecSum;
    case NodeKind::Product:
      return kPrecProduct;
    case NodeKind::Negate:
      return kPrecUnary;
    case NodeKind::Power:
      return kPrecPower;
  }
  return kPrecAtom;
}

void print(const Expr& e, int min_prec, std::string& out);

// Writes a term that follows a binary +/-, choosing the operator from the
// term's own sign.
void print_sum_tail(const Expr& term, std::string& out) {
  if (term.kind() == NodeKind::Negate) {
    out += " - ";
    print(term.children()[0], kPrecProduct, out);
    return;
  }
  if (term.kind() == NodeKind::Constant && term.constant_value() < 0) {
    out += " - ";
    out += format_number(-term.constant_value());
    return;
  }
  if (term.kind() == NodeKind::Product && term.children()[0].is_constant() &&
      term.children()[0].constant_value() < 0) {
    out += " - ";
    print(Expr::negate(term), kPrecProduct, out);
    return;
  }
  out += " + ";
  print(term, kPrecProduct, out);
}

void print(const Expr& e, int min_prec, std::string& out) {
  const bool wrap = precedence(e) < min_prec;
  if (wrap) out += '(';
  switch (e.kind()) {
    case NodeKind::Constant:
      out += format_number(e.constant_value());
      break;
    case NodeKind::Variable:
      out += "xyz"[e.variable_index()];
      break;
    case NodeKind::Parameter:
      out += e.parameter_name();
      break;
    case NodeKind::Sum: {
      auto terms = e.children();
      print(terms[0], kPrecSum, out);
      for (std::size_t i = 1; i < terms.size(); ++i) print_sum_tail(terms[i], out);
      break;
    }
    case NodeKind::Product: {
      auto factors = e.children();
      for (std::size_t i = 0; i < factors.size(); ++i) {
        if (i) out += '*';
        print(factors[i], i == 0 ? kPrecProduct : kPrecUnary, out);
      }
      break;
    }
    case NodeKind::Negate:
      out += '-';
      print(e.children()[0], kPrecUnary, out);
      break;
    case NodeKind::Power:
      print(e.children()[0], kPrecAtom, out);
      out += '^';
      out += std::to_string(e.exponent());
      break;
  }
  if (wrap) out += ')';
}

}  // namespace

std::string to_string(const Expr& e) {
  std::string out;
  print(e, kPrecSum, out);
  return out;
}

Program::Program(std::span<const Expr> outputs, const std::vector<std::string>& param_names)
    : param_count_(param_names.size()) {
  std::unordered_map<const Node*, std::uint32_t> slot_of;
  std::function<std::uint32_t(const Expr&)> emit = [&](const Expr& e) -> std::uint32_t {
    if (auto it = slot_of.find(e.id()); it != slot_of.end()) return it->second;
    Instr ins{Op::Const, 0, 0, 0.0};
    switch (e.kind()) {
      case NodeKind::Constant:
        ins.op = Op::Const;
        ins.value = e.constant_value();
        break;
      case NodeKind::Variable:
        ins.op = Op::Var;
        ins.first = static_cast<std::uint32_t>(e.variable_index());
        break;
      case NodeKind::Parameter: {
        auto it = std::find(param_names.begin(), param_names.end(), e.parameter_name());
        if (it == param_names.end())
          throw std::invalid_argument("undeclared parameter '" + e.parameter_name() + "'");
        ins.op = Op::Param;
        ins.first = static_cast<std::uint32_t>(it - param_names.begin());
        break;
      }
      case NodeKind::Sum:
      case NodeKind::Product:
      case NodeKind::Negate:
      case NodeKind::Power: {
        std::vector<std::uint32_t> args;
        for (const auto& c : e.children()) args.push_back(emit(c));
        ins.first = static_cast<std::uint32_t>(operands_.size());
        operands_.insert(operands_.end(), args.begin(), args.end());
        ins.count = static_cast<std::uint32_t>(args.size());
        if (e.kind() == NodeKind::Sum) ins.op = Op::Add;
        if (e.kind() == NodeKind::Product) ins.op = Op::Mul;
        if (e.kind() == NodeKind::Negate) ins.op = Op::Neg;
        if (e.kind() == NodeKind::Power) {
          ins.op = Op::Pow;
          ins.count = e.exponent();
        }
        break;
      }
    }
    const auto slot = static_cast<std::uint32_t>(code_.size());
    code_.push_back(ins);
    slot_of.emplace(e.id(), slot);
    return slot;
  };
  for (const auto& e : outputs) outputs_.push_back(emit(e));
}

void Program::run(const double* state, std::span<const double> params, std::span<double> out) const {
  if (params.size() < param_count_) throw std::invalid_argument("too few parameter values");
  if (out.size() != outputs_.size()) throw std::invalid_argument("output span has wrong size");
  thread_local std::vector<double> slots;
  if (slots.size() < code_.size()) slots.resize(code_.size());
  double* s = slots.data();
  const std::uint32_t* ops = operands_.data();
  for (std::size_t i = 0; i < code_.size(); ++i) {
    const Instr& ins = code_[i];
    switch (ins.op) {
      case Op::Const:
        s[i] = ins.value;
        break;
      case Op::Var:
        s[i] = state[ins.first];
        break;
      case Op::Param:
        s[i] = params[ins.first];
        break;
      case Op::Add: {
        double acc = 0.0;
        for (std::uint32_t k = 0; k < ins.count; ++k) acc += s[ops[ins.first + k]];
        s[i] = acc;
        break;
      }
      case Op::Mul: {
        double acc = 1.0;
        for (std::uint32_t k = 0; k < ins.count; ++k) acc *= s[ops[ins.first + k]];
        s[i] = acc;
        break;
      }
      case Op::Neg:
        s[i] = -s[ops[ins.first]];
        break;
      case Op::Pow:
        s[i] = ipow(s[ops[ins.first]], ins.count);
        break;
    }
  }
  for (std::size_t k = 0; k < outputs_.size(); ++k) out[k] = s[outputs_[k]];
}

double Program::run_single(const double* state, std::span<const double> params) const {
  double v = 0.0;
  run(state, params, std::span<double>(&v, 1));
  return v;
}

}  // namespace flowcurv
