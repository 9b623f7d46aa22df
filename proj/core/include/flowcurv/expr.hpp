#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace flowcurv {

enum class NodeKind : std::uint8_t {
  Constant,
  Variable,
  Parameter,
  Sum,
  Product,
  Negate,
  Power,
};

class Expr;
struct Node;

/// Immutable symbolic expression over the state variables x, y, z (indices
/// 0..2) and named parameters. Every Expr is built through the smart
/// constructors below, so it is always in structurally simplified form:
/// sums and products are flat, constants are folded, 0/1 are absorbed and
/// negations never nest.
///
/// Nodes are shared between expressions and never mutated, so an Expr may be
/// read from any number of threads.
class Expr {
 public:
  /// The constant 0.
  Expr();

  static Expr constant(double value);
  static Expr variable(int index);
  static Expr parameter(std::string name);

  static Expr sum(std::vector<Expr> terms);
  static Expr product(std::vector<Expr> factors);
  static Expr negate(Expr e);
  static Expr power(Expr base, unsigned exponent);

  NodeKind kind() const;
  bool is_constant() const { return kind() == NodeKind::Constant; }
  bool is_constant(double v) const;
  bool is_zero() const { return is_constant(0.0); }

  double constant_value() const;
  int variable_index() const;
  const std::string& parameter_name() const;
  std::span<const Expr> children() const;
  unsigned exponent() const;

  /// Identity of the shared node, used for DAG-aware compilation.
  const Node* id() const { return node_.get(); }

  /// Number of nodes counted as a tree (shared subtrees counted repeatedly).
  std::size_t tree_size() const;

  /// Parameter names referenced anywhere in the expression, sorted.
  std::vector<std::string> parameters() const;

  /// Highest variable index referenced, or -1.
  int max_variable() const;

  friend Expr operator+(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a, const Expr& b);
  friend Expr operator*(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a);

 private:
  explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

struct Node {
  NodeKind kind = NodeKind::Constant;
  double value = 0.0;
  int variable = -1;
  unsigned exponent = 0;
  std::string name;
  std::vector<Expr> args;
};

Expr pow(const Expr& base, unsigned exponent);

/// Exact partial derivative with respect to state variable `var`.
Expr diff(const Expr& e, int var);

/// Replace every occurrence of variable i by `replacement[i]`.
Expr substitute_variables(const Expr& e, const std::array<Expr, 3>& replacement);

/// Replace named parameters by constants. Parameters missing from `values`
/// are left symbolic.
Expr substitute_parameters(const Expr& e, const std::map<std::string, double>& values);

using ParamLookup = std::map<std::string, double>;

/// Tree-walking evaluation. Throws std::out_of_range for an unbound
/// parameter. Prefer `Program` for repeated evaluation.
double evaluate(const Expr& e, const std::array<double, 3>& state, const ParamLookup& params);

/// Infix rendering that `parse_expr` reads back to an equivalent expression.
std::string to_string(const Expr& e);

/// Several expressions compiled into one straight-line program over a shared
/// DAG, so subexpressions used by more than one output are computed once.
/// Parameters are resolved to positions in `param_names` at compile time and
/// bound by value at every call.
class Program {
 public:
  Program() = default;
  Program(std::span<const Expr> outputs, const std::vector<std::string>& param_names);

  std::size_t output_count() const { return outputs_.size(); }
  std::size_t instruction_count() const { return code_.size(); }

  /// Evaluates all outputs. `out.size()` must equal `output_count()`.
  void run(const double* state, std::span<const double> params, std::span<double> out) const;

  double run_single(const double* state, std::span<const double> params) const;

 private:
  enum class Op : std::uint8_t { Const, Var, Param, Add, Mul, Neg, Pow };
  struct Instr {
    Op op;
    std::uint32_t first;  // operand start in operands_, or var/param index
    std::uint32_t count;  // operand count or exponent
    double value;
  };
  std::vector<Instr> code_;
  std::vector<std::uint32_t> operands_;
  std::vector<std::uint32_t> outputs_;
  std::size_t param_count_ = 0;
};

}  // namespace flowcurv
