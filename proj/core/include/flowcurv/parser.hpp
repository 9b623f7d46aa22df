#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "flowcurv/expr.hpp"
#include "flowcurv/field.hpp"

namespace flowcurv {

/// Parses one component expression.
///
/// Grammar, loosest to tightest binding:
///   sum     := product (('+' | '-') product)*
///   product := unary ('*' unary)*
///   unary   := ('-' | '+') unary | power
///   power   := primary ('^' INT)*        (right-associative)
///   primary := NUMBER | IDENT | '(' sum ')'
///
/// x, y and z are the state variables. Any other identifier is a parameter;
/// when `declared` is given it must be listed there, otherwise ParseError.
/// `line` is only used for error positions.
Expr parse_expr(std::string_view source,
                const std::optional<std::vector<std::string>>& declared = std::nullopt,
                int line = 1);

/// Builds a field from three component expressions.
VectorField parse_field(const std::array<std::string, 3>& sources, std::vector<Parameter> params = {});

/// Reads the custom-system text format:
///
///   # comment
///   param a = 0.2
///   dx = -y - z
///   dy = x + a*y
///   dz = 0.2 + z*(x - 5.7)
///
/// All three of dx, dy, dz are required, each exactly once.
VectorField parse_system_file(std::string_view text);

}  // namespace flowcurv
