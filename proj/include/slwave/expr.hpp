// expr.hpp
//
// Tiny closed-form expression evaluator for custom metric components.
// Grammar: numbers, variables t and r, operators + - * / ^ (right assoc),
// unary minus, parentheses, and the functions ln(x) and exp(x).

#pragma once

#include <cctype>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace slwave {

class Expr {
 public:
  static Expr parse(const std::string& text) {
    Parser p(text);
    Expr e;
    e.root_ = p.parse_expr();
    p.skip_ws();
    if (!p.done())
      throw std::invalid_argument("expression: trailing input at '" + p.rest() + "'");
    return e;
  }

  double eval(double t, double r) const {
    if (!root_) throw std::logic_error("empty expression");
    return eval_node(*root_, t, r);
  }

  bool empty() const { return !root_; }

 private:
  enum class Op { Num, VarT, VarR, Neg, Add, Sub, Mul, Div, Pow, Ln, Exp };

  struct Node {
    Op op;
    double num = 0.0;
    std::unique_ptr<Node> a, b;
  };

  using NodePtr = std::unique_ptr<Node>;
  NodePtr root_;

  static double eval_node(const Node& n, double t, double r) {
    switch (n.op) {
      case Op::Num: return n.num;
      case Op::VarT: return t;
      case Op::VarR: return r;
      case Op::Neg: return -eval_node(*n.a, t, r);
      case Op::Add: return eval_node(*n.a, t, r) + eval_node(*n.b, t, r);
      case Op::Sub: return eval_node(*n.a, t, r) - eval_node(*n.b, t, r);
      case Op::Mul: return eval_node(*n.a, t, r) * eval_node(*n.b, t, r);
      case Op::Div: return eval_node(*n.a, t, r) / eval_node(*n.b, t, r);
      case Op::Pow: return std::pow(eval_node(*n.a, t, r), eval_node(*n.b, t, r));
      case Op::Ln: return std::log(eval_node(*n.a, t, r));
      case Op::Exp: return std::exp(eval_node(*n.a, t, r));
    }
    return 0.0;
  }

  struct Parser {
    const std::string& s;
    std::size_t i = 0;
    explicit Parser(const std::string& text) : s(text) {}

    void skip_ws() { while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i; }
    bool done() const { return i >= s.size(); }
    std::string rest() const { return s.substr(i); }

    bool accept(char c) {
      skip_ws();
      if (i < s.size() && s[i] == c) { ++i; return true; }
      return false;
    }

    NodePtr parse_expr() {
      NodePtr lhs = parse_term();
      for (;;) {
        if (accept('+')) lhs = make(Op::Add, std::move(lhs), parse_term());
        else if (accept('-')) lhs = make(Op::Sub, std::move(lhs), parse_term());
        else return lhs;
      }
    }

    NodePtr parse_term() {
      NodePtr lhs = parse_factor();
      for (;;) {
        if (accept('*')) lhs = make(Op::Mul, std::move(lhs), parse_factor());
        else if (accept('/')) lhs = make(Op::Div, std::move(lhs), parse_factor());
        else return lhs;
      }
    }

    NodePtr parse_factor() {
      skip_ws();
      if (accept('-')) {
        auto n = std::make_unique<Node>();
        n->op = Op::Neg;
        n->a = parse_factor();
        return n;
      }
      NodePtr base = parse_primary();
      if (accept('^'))
        return make(Op::Pow, std::move(base), parse_factor());  // right associative
      return base;
    }

    NodePtr parse_primary() {
      skip_ws();
      if (done()) throw std::invalid_argument("expression: unexpected end of input");
      const char c = s[i];
      if (c == '(') {
        ++i;
        NodePtr e = parse_expr();
        if (!accept(')')) throw std::invalid_argument("expression: missing ')'");
        return e;
      }
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
        std::size_t used = 0;
        const double v = std::stod(s.substr(i), &used);
        i += used;
        auto n = std::make_unique<Node>();
        n->op = Op::Num;
        n->num = v;
        return n;
      }
      if (std::isalpha(static_cast<unsigned char>(c))) {
        std::size_t j = i;
        while (j < s.size() && std::isalpha(static_cast<unsigned char>(s[j]))) ++j;
        const std::string name = s.substr(i, j - i);
        i = j;
        if (name == "t") return leaf(Op::VarT);
        if (name == "r") return leaf(Op::VarR);
        if (name == "ln" || name == "exp") {
          if (!accept('(')) throw std::invalid_argument("expression: " + name + " needs '('");
          NodePtr arg = parse_expr();
          if (!accept(')')) throw std::invalid_argument("expression: missing ')'");
          auto n = std::make_unique<Node>();
          n->op = (name == "ln") ? Op::Ln : Op::Exp;
          n->a = std::move(arg);
          return n;
        }
        throw std::invalid_argument("expression: unknown identifier '" + name + "'");
      }
      throw std::invalid_argument(std::string("expression: unexpected character '") + c + "'");
    }

    static NodePtr leaf(Op op) {
      auto n = std::make_unique<Node>();
      n->op = op;
      return n;
    }

    static NodePtr make(Op op, NodePtr a, NodePtr b) {
      auto n = std::make_unique<Node>();
      n->op = op;
      n->a = std::move(a);
      n->b = std::move(b);
      return n;
    }
  };
};

}  // namespace slwave
