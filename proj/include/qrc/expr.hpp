#pragma once

// Closed-form scalar expressions over coordinates x1..xm.
//
// Expressions are immutable DAGs. A Tape linearizes one or more roots into a
// topologically ordered instruction list so shared subexpressions are evaluated
// once, for plain doubles or for Dual numbers alike.

#include <cctype>
#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "qrc/dual.hpp"

namespace qrc {

/// Evaluation outside the natural domain of a coefficient or map
/// (log of a non-positive number, division by zero, ...).
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

enum class Op : std::uint8_t { Const, Var, Add, Sub, Mul, Div, Neg, Pow, Sin, Cos, Exp, Log, Sqrt };

namespace detail {
struct ExprNode {
  Op op = Op::Const;
  double value = 0.0;
  int var = -1;
  std::shared_ptr<const ExprNode> a, b;
};
}  // namespace detail

class Expr {
 public:
  Expr() : Expr(0.0) {}
  Expr(double c) : node_(make(Op::Const, c, -1, nullptr, nullptr)) {}  // NOLINT(implicit)

  static Expr var(int axis) {
    if (axis < 0) throw std::invalid_argument("Expr::var: negative axis");
    return Expr(make(Op::Var, 0.0, axis, nullptr, nullptr));
  }

  Op op() const { return node_->op; }
  bool is_const() const { return node_->op == Op::Const; }
  double const_value() const { return node_->value; }
  const detail::ExprNode* node() const { return node_.get(); }

  /// Largest coordinate axis referenced, or -1 for constants.
  int max_var() const {
    std::unordered_map<const detail::ExprNode*, int> memo;
    return max_var_rec(node_.get(), memo);
  }

  friend Expr operator+(const Expr& a, const Expr& b) {
    if (a.is_const() && b.is_const()) return a.const_value() + b.const_value();
    if (a.is_const() && a.const_value() == 0.0) return b;
    if (b.is_const() && b.const_value() == 0.0) return a;
    return binary(Op::Add, a, b);
  }
  friend Expr operator-(const Expr& a, const Expr& b) {
    if (a.is_const() && b.is_const()) return a.const_value() - b.const_value();
    if (b.is_const() && b.const_value() == 0.0) return a;
    if (a.is_const() && a.const_value() == 0.0) return -b;
    return binary(Op::Sub, a, b);
  }
  friend Expr operator*(const Expr& a, const Expr& b) {
    if (a.is_const() && b.is_const()) return a.const_value() * b.const_value();
    if ((a.is_const() && a.const_value() == 0.0) || (b.is_const() && b.const_value() == 0.0)) return 0.0;
    if (a.is_const() && a.const_value() == 1.0) return b;
    if (b.is_const() && b.const_value() == 1.0) return a;
    return binary(Op::Mul, a, b);
  }
  friend Expr operator/(const Expr& a, const Expr& b) {
    if (a.is_const() && b.is_const() && b.const_value() != 0.0) return a.const_value() / b.const_value();
    if (b.is_const() && b.const_value() == 1.0) return a;
    return binary(Op::Div, a, b);
  }
  friend Expr operator-(const Expr& a) {
    if (a.is_const()) return -a.const_value();
    return unary(Op::Neg, a);
  }
  Expr& operator+=(const Expr& o) { return *this = *this + o; }
  Expr& operator-=(const Expr& o) { return *this = *this - o; }
  Expr& operator*=(const Expr& o) { return *this = *this * o; }

  friend Expr pow(const Expr& a, const Expr& b) {
    if (b.is_const() && b.const_value() == 1.0) return a;
    if (b.is_const() && b.const_value() == 0.0) return 1.0;
    if (a.is_const() && b.is_const()) return std::pow(a.const_value(), b.const_value());
    return binary(Op::Pow, a, b);
  }
  friend Expr sin(const Expr& a) { return a.is_const() ? Expr(std::sin(a.const_value())) : unary(Op::Sin, a); }
  friend Expr cos(const Expr& a) { return a.is_const() ? Expr(std::cos(a.const_value())) : unary(Op::Cos, a); }
  friend Expr exp(const Expr& a) { return a.is_const() ? Expr(std::exp(a.const_value())) : unary(Op::Exp, a); }
  friend Expr log(const Expr& a) { return unary(Op::Log, a); }
  friend Expr sqrt(const Expr& a) { return unary(Op::Sqrt, a); }

  /// Replaces every coordinate x_i by replacements[i] (function composition).
  Expr substitute(std::span<const Expr> replacements) const {
    std::unordered_map<const detail::ExprNode*, Expr> memo;
    return subst_rec(*this, replacements, memo);
  }

  std::string to_string() const {
    std::ostringstream os;
    print(os, node_.get());
    return os.str();
  }

 private:
  using NodePtr = std::shared_ptr<const detail::ExprNode>;
  explicit Expr(NodePtr n) : node_(std::move(n)) {}

  static NodePtr make(Op op, double v, int var, NodePtr a, NodePtr b) {
    auto n = std::make_shared<detail::ExprNode>();
    n->op = op;
    n->value = v;
    n->var = var;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
  }
  static Expr binary(Op op, const Expr& a, const Expr& b) { return Expr(make(op, 0.0, -1, a.node_, b.node_)); }
  static Expr unary(Op op, const Expr& a) { return Expr(make(op, 0.0, -1, a.node_, nullptr)); }

  static int max_var_rec(const detail::ExprNode* n, std::unordered_map<const detail::ExprNode*, int>& memo) {
    if (!n) return -1;
    if (auto it = memo.find(n); it != memo.end()) return it->second;
    int r = n->op == Op::Var ? n->var : std::max(max_var_rec(n->a.get(), memo), max_var_rec(n->b.get(), memo));
    memo.emplace(n, r);
    return r;
  }

  static Expr subst_rec(const Expr& e, std::span<const Expr> rep,
                        std::unordered_map<const detail::ExprNode*, Expr>& memo) {
    const auto* n = e.node_.get();
    if (auto it = memo.find(n); it != memo.end()) return it->second;
    Expr out;
    switch (n->op) {
      case Op::Const: out = e; break;
      case Op::Var:
        if (n->var >= static_cast<int>(rep.size()))
          throw std::invalid_argument("Expr::substitute: coordinate x" + std::to_string(n->var + 1) + " has no replacement");
        out = rep[n->var];
        break;
      default: {
        Expr a = subst_rec(Expr(n->a), rep, memo);
        Expr b = n->b ? subst_rec(Expr(n->b), rep, memo) : Expr();
        switch (n->op) {
          case Op::Add: out = a + b; break;
          case Op::Sub: out = a - b; break;
          case Op::Mul: out = a * b; break;
          case Op::Div: out = a / b; break;
          case Op::Neg: out = -a; break;
          case Op::Pow: out = pow(a, b); break;
          case Op::Sin: out = sin(a); break;
          case Op::Cos: out = cos(a); break;
          case Op::Exp: out = exp(a); break;
          case Op::Log: out = log(a); break;
          case Op::Sqrt: out = sqrt(a); break;
          default: break;
        }
      }
    }
    memo.emplace(n, out);
    return out;
  }

  static void print(std::ostream& os, const detail::ExprNode* n) {
    switch (n->op) {
      case Op::Const: os << n->value; return;
      case Op::Var: os << 'x' << n->var + 1; return;
      case Op::Add: os << '('; print(os, n->a.get()); os << " + "; print(os, n->b.get()); os << ')'; return;
      case Op::Sub: os << '('; print(os, n->a.get()); os << " - "; print(os, n->b.get()); os << ')'; return;
      case Op::Mul: os << '('; print(os, n->a.get()); os << " * "; print(os, n->b.get()); os << ')'; return;
      case Op::Div: os << '('; print(os, n->a.get()); os << " / "; print(os, n->b.get()); os << ')'; return;
      case Op::Neg: os << "-("; print(os, n->a.get()); os << ')'; return;
      case Op::Pow: os << "pow("; print(os, n->a.get()); os << ", "; print(os, n->b.get()); os << ')'; return;
      case Op::Sin: os << "sin("; break;
      case Op::Cos: os << "cos("; break;
      case Op::Exp: os << "exp("; break;
      case Op::Log: os << "log("; break;
      case Op::Sqrt: os << "sqrt("; break;
    }
    print(os, n->a.get());
    os << ')';
  }

  NodePtr node_;
};

inline Expr x(int axis) { return Expr::var(axis); }

// ---------------------------------------------------------------------------
// Parser for the configuration grammar:
//   expr  := term (('+'|'-') term)*
//   term  := unary (('*'|'/') unary)*
//   unary := '-' unary | power
//   power := primary ('^' unary)?
//   primary := number | 'pi' | x<k> | fn '(' expr ')' | 'pow' '(' expr ',' expr ')' | '(' expr ')'
// with fn in {sin, cos, exp, log, sqrt} and coordinates x1..x<dim>.

struct ParseError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

namespace detail {
class ExprParser {
 public:
  ExprParser(std::string_view src, int dim) : src_(src), dim_(dim) {}

  Expr parse() {
    Expr e = expr();
    skip_ws();
    if (pos_ != src_.size()) fail("unexpected '" + std::string(1, src_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError("expression \"" + std::string(src_) + "\" at column " + std::to_string(pos_ + 1) + ": " + what);
  }
  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }
  bool eat(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  void expect(char c) {
    if (!eat(c)) fail(std::string("expected '") + c + "'");
  }

  Expr expr() {
    Expr e = term();
    for (;;) {
      if (eat('+')) e = e + term();
      else if (eat('-')) e = e - term();
      else return e;
    }
  }
  Expr term() {
    Expr e = unary();
    for (;;) {
      if (eat('*')) e = e * unary();
      else if (eat('/')) e = e / unary();
      else return e;
    }
  }
  Expr unary() {
    if (eat('-')) return -unary();
    if (eat('+')) return unary();
    return power();
  }
  Expr power() {
    Expr base = primary();
    if (eat('^')) return pow(base, unary());
    return base;
  }
  Expr primary() {
    skip_ws();
    if (pos_ >= src_.size()) fail("unexpected end of input");
    char c = src_[pos_];
    if (eat('(')) {
      Expr e = expr();
      expect(')');
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t start = pos_;
      while (pos_ < src_.size() && std::isalpha(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      std::string_view word = src_.substr(start, pos_ - start);
      if (word == "x") {
        std::size_t dstart = pos_;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
        if (dstart == pos_) fail("coordinate symbol needs an index, e.g. x1");
        int k = std::stoi(std::string(src_.substr(dstart, pos_ - dstart)));
        if (k < 1 || k > dim_) fail("coordinate x" + std::to_string(k) + " outside x1..x" + std::to_string(dim_));
        return Expr::var(k - 1);
      }
      if (word == "pi") return Expr(3.14159265358979323846);
      if (word == "pow") {
        expect('(');
        Expr a = expr();
        expect(',');
        Expr b = expr();
        expect(')');
        return pow(a, b);
      }
      expect('(');
      Expr a = expr();
      expect(')');
      if (word == "sin") return sin(a);
      if (word == "cos") return cos(a);
      if (word == "exp") return exp(a);
      if (word == "log") return log(a);
      if (word == "sqrt") return sqrt(a);
      pos_ = start;
      fail("unknown function '" + std::string(word) + "'");
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }
  Expr number() {
    std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.' || src_[pos_] == 'e' ||
            src_[pos_] == 'E' ||
            ((src_[pos_] == '-' || src_[pos_] == '+') && pos_ > start &&
             (src_[pos_ - 1] == 'e' || src_[pos_ - 1] == 'E'))))
      ++pos_;
    std::string tok(src_.substr(start, pos_ - start));
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      pos_ = start;
      fail("malformed number");
    }
    if (used != tok.size()) {
      pos_ = start;
      fail("malformed number '" + tok + "'");
    }
    return Expr(v);
  }

  std::string_view src_;
  int dim_;
  std::size_t pos_ = 0;
};
}  // namespace detail

/// Parses `src` as an expression in coordinates x1..x<dim>.
inline Expr parse_expr(std::string_view src, int dim) { return detail::ExprParser(src, dim).parse(); }

// ---------------------------------------------------------------------------

/// Linearized evaluation program for a list of expression roots.
class Tape {
 public:
  Tape() = default;
  Tape(std::span<const Expr> roots, int num_inputs) : num_inputs_(num_inputs) {
    std::unordered_map<const detail::ExprNode*, int> slot;
    for (const auto& r : roots) outputs_.push_back(emit(r.node(), slot));
    for (const auto& ins : code_)
      if (ins.op == Op::Var && ins.var >= num_inputs_)
        throw std::invalid_argument("Tape: expression references x" + std::to_string(ins.var + 1) +
                                    " but only " + std::to_string(num_inputs_) + " inputs are declared");
  }

  int num_inputs() const { return num_inputs_; }
  int num_outputs() const { return static_cast<int>(outputs_.size()); }

  /// Evaluates all roots at `in`; throws DomainError on an invalid operation.
  template <class T>
  void eval(std::span<const T> in, std::span<T> out) const {
    thread_local std::vector<T> regs;
    regs.resize(code_.size());
    for (std::size_t i = 0; i < code_.size(); ++i) {
      const Ins& c = code_[i];
      switch (c.op) {
        case Op::Const: regs[i] = T(c.value); break;
        case Op::Var: regs[i] = in[c.var]; break;
        case Op::Add: regs[i] = regs[c.a] + regs[c.b]; break;
        case Op::Sub: regs[i] = regs[c.a] - regs[c.b]; break;
        case Op::Mul: regs[i] = regs[c.a] * regs[c.b]; break;
        case Op::Div:
          if (value_of(regs[c.b]) == 0.0) throw DomainError("division by zero");
          regs[i] = regs[c.a] / regs[c.b];
          break;
        case Op::Neg: regs[i] = -regs[c.a]; break;
        case Op::Pow: regs[i] = eval_pow(regs[c.a], regs[c.b], code_[c.b]); break;
        case Op::Sin: { using std::sin; regs[i] = sin(regs[c.a]); break; }
        case Op::Cos: { using std::cos; regs[i] = cos(regs[c.a]); break; }
        case Op::Exp: { using std::exp; regs[i] = exp(regs[c.a]); break; }
        case Op::Log: {
          using std::log;
          if (!(value_of(regs[c.a]) > 0.0)) throw DomainError("log of non-positive value");
          regs[i] = log(regs[c.a]);
          break;
        }
        case Op::Sqrt: {
          using std::sqrt;
          if (value_of(regs[c.a]) < 0.0) throw DomainError("sqrt of negative value");
          regs[i] = sqrt(regs[c.a]);
          break;
        }
      }
    }
    for (std::size_t k = 0; k < outputs_.size(); ++k) out[k] = regs[outputs_[k]];
  }

 private:
  struct Ins {
    Op op;
    double value = 0.0;
    int var = -1;
    int a = -1, b = -1;
  };

  int emit(const detail::ExprNode* n, std::unordered_map<const detail::ExprNode*, int>& slot) {
    if (auto it = slot.find(n); it != slot.end()) return it->second;
    Ins ins{n->op, n->value, n->var};
    if (n->a) ins.a = emit(n->a.get(), slot);
    if (n->b) ins.b = emit(n->b.get(), slot);
    code_.push_back(ins);
    int id = static_cast<int>(code_.size()) - 1;
    slot.emplace(n, id);
    return id;
  }

  template <class T>
  static T eval_pow(const T& base, const T& expo, const Ins& expo_ins) {
    using std::pow;
    double bv = value_of(base);
    if (expo_ins.op == Op::Const) {
      double p = expo_ins.value;
      bool integral = std::floor(p) == p;
      if (!integral && bv < 0.0) throw DomainError("fractional power of negative value");
      if (p < 0.0 && bv == 0.0) throw DomainError("negative power of zero");
      return pow(base, p);
    }
    if (!(bv > 0.0)) throw DomainError("variable exponent requires a positive base");
    return pow(base, expo);
  }

  int num_inputs_ = 0;
  std::vector<Ins> code_;
  std::vector<int> outputs_;
};

}  // namespace qrc
