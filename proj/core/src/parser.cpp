#include "flowcurv/parser.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <climits>
#include <cstdlib>
#include <map>
#include <set>

#include "flowcurv/errors.hpp"

namespace flowcurv {

namespace {

class ExprParser {
 public:
  ExprParser(std::string_view src, const std::optional<std::vector<std::string>>& declared, int line,
             int column_offset)
      : src_(src), declared_(declared), line_(line), column_offset_(column_offset) {}

  Expr parse() {
    Expr e = parse_sum();
    skip_space();
    if (pos_ < src_.size()) fail(std::string("unexpected '") + src_[pos_] + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(msg, line_, static_cast<int>(pos_) + 1 + column_offset_);
  }

  void skip_space() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  Expr parse_sum() {
    std::vector<Expr> terms{parse_product()};
    for (;;) {
      if (accept('+')) {
        terms.push_back(parse_product());
      } else if (accept('-')) {
        terms.push_back(-parse_product());
      } else {
        break;
      }
    }
    return Expr::sum(std::move(terms));
  }

  Expr parse_product() {
    std::vector<Expr> factors{parse_unary()};
    while (accept('*')) factors.push_back(parse_unary());
    return Expr::product(std::move(factors));
  }

  Expr parse_unary() {
    if (accept('-')) return -parse_unary();
    if (accept('+')) return parse_unary();
    return parse_power();
  }

  Expr parse_power() {
    Expr base = parse_primary();
    std::vector<unsigned> exps;
    while (accept('^')) exps.push_back(parse_exponent());
    // Right-associative: a^b^c = a^(b^c).
    unsigned long long e = 1;
    bool have = !exps.empty();
    for (auto it = exps.rbegin(); it != exps.rend(); ++it) {
      if (it == exps.rbegin()) {
        e = *it;
        continue;
      }
      unsigned long long r = 1;
      for (unsigned long long k = 0; k < e; ++k) {
        r *= *it;
        if (r > 1024) fail("exponent too large");
      }
      e = r;
    }
    if (!have) return base;
    if (e > 1024) fail("exponent too large");
    return pow(base, static_cast<unsigned>(e));
  }

  unsigned parse_exponent() {
    skip_space();
    if (pos_ < src_.size() && src_[pos_] == '-') fail("negative exponents are not supported");
    std::size_t start = pos_;
    while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    if (start == pos_) fail("expected a non-negative integer exponent");
    if (pos_ < src_.size() && (src_[pos_] == '.' || src_[pos_] == 'e' || src_[pos_] == 'E')) {
      pos_ = start;
      fail("exponent must be an integer");
    }
    const std::string digits(src_.substr(start, pos_ - start));
    const unsigned long v = std::strtoul(digits.c_str(), nullptr, 10);
    if (v > 1024) {
      pos_ = start;
      fail("exponent too large");
    }
    return static_cast<unsigned>(v);
  }

  Expr parse_primary() {
    skip_space();
    if (pos_ >= src_.size()) fail("unexpected end of expression");
    const char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      Expr e = parse_sum();
      if (!accept(')')) fail("expected ')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
    fail(std::string("unexpected '") + c + "'");
  }

  Expr parse_number() {
    const std::size_t start = pos_;
    const std::string rest(src_.substr(pos_));
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(rest.c_str(), &end);
    if (end == rest.c_str()) fail("malformed number");
    if (errno == ERANGE) fail("number out of range");
    // strtod accepts hex and inf/nan; restrict to plain decimals.
    for (const char* p = rest.c_str(); p != end; ++p) {
      const char ch = *p;
      if (!(std::isdigit(static_cast<unsigned char>(ch)) || ch == '.' || ch == 'e' || ch == 'E' || ch == '+' ||
            ch == '-')) {
        pos_ = start;
        fail("malformed number");
      }
    }
    pos_ += static_cast<std::size_t>(end - rest.c_str());
    return Expr::constant(v);
  }

  Expr parse_identifier() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
      ++pos_;
    const std::string name(src_.substr(start, pos_ - start));
    if (name == "x") return Expr::variable(0);
    if (name == "y") return Expr::variable(1);
    if (name == "z") return Expr::variable(2);
    if (declared_ && std::find(declared_->begin(), declared_->end(), name) == declared_->end()) {
      pos_ = start;
      fail("unknown identifier '" + name + "'");
    }
    return Expr::parameter(name);
  }

  std::string_view src_;
  const std::optional<std::vector<std::string>>& declared_;
  int line_;
  int column_offset_;
  std::size_t pos_ = 0;
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool is_identifier(std::string_view s) {
  if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  return std::all_of(s.begin(), s.end(),
                     [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; });
}

}  // namespace

Expr parse_expr(std::string_view source, const std::optional<std::vector<std::string>>& declared, int line) {
  return ExprParser(source, declared, line, 0).parse();
}

VectorField parse_field(const std::array<std::string, 3>& sources, std::vector<Parameter> params) {
  std::vector<std::string> names;
  for (const auto& p : params) names.push_back(p.name);
  const std::optional<std::vector<std::string>> declared(names);
  std::array<Expr, 3> comps;
  for (int i = 0; i < 3; ++i) comps[i] = parse_expr(sources[i], declared, i + 1);
  return VectorField(std::move(comps), std::move(params));
}

VectorField parse_system_file(std::string_view text) {
  struct Line {
    int number;
    std::string_view content;
    int offset;  // column of content start, 0-based
  };
  std::vector<Line> lines;
  int number = 0;
  while (!text.empty()) {
    ++number;
    const auto nl = text.find('\n');
    std::string_view raw = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
    if (trim(raw).empty()) continue;
    lines.push_back({number, raw, 0});
  }

  std::vector<Parameter> params;
  std::map<std::string, std::pair<std::string_view, std::pair<int, int>>> components;
  for (const auto& ln : lines) {
    const auto eq = ln.content.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected '='", ln.number, 1);
    std::string_view lhs = trim(ln.content.substr(0, eq));
    std::string_view rhs = ln.content.substr(eq + 1);
    const int rhs_col = static_cast<int>(eq) + 1;
    if (lhs.starts_with("param") && lhs.size() > 5 && std::isspace(static_cast<unsigned char>(lhs[5]))) {
      std::string_view name = trim(lhs.substr(5));
      if (!is_identifier(name) || name == "x" || name == "y" || name == "z")
        throw ParseError("invalid parameter name '" + std::string(name) + "'", ln.number, 1);
      for (const auto& p : params)
        if (p.name == name) throw ParseError("duplicate parameter '" + std::string(name) + "'", ln.number, 1);
      // Defaults are constant expressions, e.g. "-0.5" or "2*1.5".
      Expr value = ExprParser(rhs, std::vector<std::string>{}, ln.number, rhs_col).parse();
      if (!value.is_constant() || value.max_variable() >= 0)
        throw ParseError("parameter default must be a constant", ln.number, rhs_col + 1);
      params.push_back({std::string(name), value.constant_value()});
      continue;
    }
    if (lhs != "dx" && lhs != "dy" && lhs != "dz")
      throw ParseError("expected 'dx', 'dy', 'dz' or 'param <name>'", ln.number, 1);
    if (components.contains(std::string(lhs)))
      throw ParseError("duplicate definition of '" + std::string(lhs) + "'", ln.number, 1);
    components[std::string(lhs)] = {rhs, {ln.number, rhs_col}};
  }
  for (const char* key : {"dx", "dy", "dz"})
    if (!components.contains(key)) throw ParseError(std::string("missing '") + key + " = ...'", number + 1, 1);

  std::vector<std::string> names;
  for (const auto& p : params) names.push_back(p.name);
  const std::optional<std::vector<std::string>> declared(names);
  std::array<Expr, 3> comps;
  const char* keys[3] = {"dx", "dy", "dz"};
  for (int i = 0; i < 3; ++i) {
    const auto& [src, pos] = components[keys[i]];
    comps[i] = ExprParser(src, declared, pos.first, pos.second).parse();
  }
  return VectorField(std::move(comps), std::move(params));
}

}  // namespace flowcurv
