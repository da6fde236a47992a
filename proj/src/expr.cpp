#include "laplab/expr.hpp"

#include <cctype>
#include <cmath>
#include <sstream>

namespace laplab {

// Expression tree nodes: constants, coordinates, +, -, *, integer powers.
struct Expr::Node {
  enum Kind { Const, Coord, Add, Sub, Mul, Neg, Pow } kind;
  double v = 0.0;
  int coord = 0;
  int exponent = 0;
  std::shared_ptr<const Node> a, b;
};

namespace {

using NodePtr = std::shared_ptr<const Expr::Node>;

NodePtr make_const(double v) {
  auto n = std::make_shared<Expr::Node>();
  n->kind = Expr::Node::Const;
  n->v = v;
  return n;
}

NodePtr make_coord(int c) {
  auto n = std::make_shared<Expr::Node>();
  n->kind = Expr::Node::Coord;
  n->coord = c;
  return n;
}

NodePtr make_bin(Expr::Node::Kind k, NodePtr a, NodePtr b) {
  // Light constant folding keeps derivative trees small.
  if (a->kind == Expr::Node::Const && b->kind == Expr::Node::Const) {
    switch (k) {
      case Expr::Node::Add: return make_const(a->v + b->v);
      case Expr::Node::Sub: return make_const(a->v - b->v);
      case Expr::Node::Mul: return make_const(a->v * b->v);
      default: break;
    }
  }
  if (k == Expr::Node::Mul) {
    if (a->kind == Expr::Node::Const && a->v == 0.0) return make_const(0.0);
    if (b->kind == Expr::Node::Const && b->v == 0.0) return make_const(0.0);
    if (a->kind == Expr::Node::Const && a->v == 1.0) return b;
    if (b->kind == Expr::Node::Const && b->v == 1.0) return a;
  }
  if (k == Expr::Node::Add) {
    if (a->kind == Expr::Node::Const && a->v == 0.0) return b;
    if (b->kind == Expr::Node::Const && b->v == 0.0) return a;
  }
  if (k == Expr::Node::Sub && b->kind == Expr::Node::Const && b->v == 0.0) return a;
  auto n = std::make_shared<Expr::Node>();
  n->kind = k;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

NodePtr make_neg(NodePtr a) {
  if (a->kind == Expr::Node::Const) return make_const(-a->v);
  auto n = std::make_shared<Expr::Node>();
  n->kind = Expr::Node::Neg;
  n->a = std::move(a);
  return n;
}

NodePtr make_pow(NodePtr a, int e) {
  if (e == 0) return make_const(1.0);
  if (e == 1) return a;
  if (a->kind == Expr::Node::Const) return make_const(std::pow(a->v, e));
  auto n = std::make_shared<Expr::Node>();
  n->kind = Expr::Node::Pow;
  n->a = std::move(a);
  n->exponent = e;
  return n;
}

struct Parser {
  const std::string& text;
  std::size_t pos = 0;

  explicit Parser(const std::string& t) : text(t) {}

  void skip_ws() {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos])))
      ++pos;
  }
  bool eat(char c) {
    skip_ws();
    if (pos < text.size() && text[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }
  [[noreturn]] void fail(const std::string& what) {
    throw std::invalid_argument("expression parse error at position " +
                                std::to_string(pos) + ": " + what);
  }

  NodePtr parse_expr() {
    NodePtr lhs = parse_term();
    while (true) {
      if (eat('+'))
        lhs = make_bin(Expr::Node::Add, lhs, parse_term());
      else if (eat('-'))
        lhs = make_bin(Expr::Node::Sub, lhs, parse_term());
      else
        return lhs;
    }
  }

  NodePtr parse_term() {
    NodePtr lhs = parse_factor();
    while (eat('*')) lhs = make_bin(Expr::Node::Mul, lhs, parse_factor());
    return lhs;
  }

  NodePtr parse_factor() {
    NodePtr base = parse_atom();
    if (eat('^')) {
      skip_ws();
      bool neg = eat('-');
      std::size_t start = pos;
      while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos])))
        ++pos;
      if (pos == start) fail("exponent must be an integer");
      int e = std::stoi(text.substr(start, pos - start));
      if (neg) fail("negative exponents are not supported");
      return make_pow(base, e);
    }
    return base;
  }

  NodePtr parse_atom() {
    skip_ws();
    if (eat('(')) {
      NodePtr inner = parse_expr();
      if (!eat(')')) fail("expected ')'");
      return inner;
    }
    if (eat('-')) return make_neg(parse_atom());
    if (pos >= text.size()) fail("unexpected end of input");
    char c = text[pos];
    if (c == 'x' || c == 'X') {
      ++pos;
      std::size_t start = pos;
      while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos])))
        ++pos;
      if (pos == start) fail("coordinate variable needs an index (x1, x2, ...)");
      int idx = std::stoi(text.substr(start, pos - start));
      if (idx < 1) fail("coordinates are 1-based");
      return make_coord(idx - 1);
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t consumed = 0;
      double v = std::stod(text.substr(pos), &consumed);
      pos += consumed;
      return make_const(v);
    }
    fail("unexpected character");
  }
};

double eval_node(const Expr::Node& n, const Vec& x) {
  switch (n.kind) {
    case Expr::Node::Const: return n.v;
    case Expr::Node::Coord:
      if (n.coord >= x.size())
        throw std::invalid_argument("expression uses coordinate beyond ambient dim");
      return x[n.coord];
    case Expr::Node::Add: return eval_node(*n.a, x) + eval_node(*n.b, x);
    case Expr::Node::Sub: return eval_node(*n.a, x) - eval_node(*n.b, x);
    case Expr::Node::Mul: return eval_node(*n.a, x) * eval_node(*n.b, x);
    case Expr::Node::Neg: return -eval_node(*n.a, x);
    case Expr::Node::Pow: return std::pow(eval_node(*n.a, x), n.exponent);
  }
  return 0.0;
}

NodePtr diff_node(const NodePtr& n, int coord) {
  switch (n->kind) {
    case Expr::Node::Const: return make_const(0.0);
    case Expr::Node::Coord: return make_const(n->coord == coord ? 1.0 : 0.0);
    case Expr::Node::Add:
      return make_bin(Expr::Node::Add, diff_node(n->a, coord), diff_node(n->b, coord));
    case Expr::Node::Sub:
      return make_bin(Expr::Node::Sub, diff_node(n->a, coord), diff_node(n->b, coord));
    case Expr::Node::Mul:
      return make_bin(Expr::Node::Add,
                      make_bin(Expr::Node::Mul, diff_node(n->a, coord), n->b),
                      make_bin(Expr::Node::Mul, n->a, diff_node(n->b, coord)));
    case Expr::Node::Neg: return make_neg(diff_node(n->a, coord));
    case Expr::Node::Pow:
      return make_bin(Expr::Node::Mul,
                      make_bin(Expr::Node::Mul, make_const(n->exponent),
                               make_pow(n->a, n->exponent - 1)),
                      diff_node(n->a, coord));
  }
  return make_const(0.0);
}

int max_coord_node(const Expr::Node& n) {
  switch (n.kind) {
    case Expr::Node::Const: return -1;
    case Expr::Node::Coord: return n.coord;
    case Expr::Node::Neg:
    case Expr::Node::Pow: return max_coord_node(*n.a);
    default: return std::max(max_coord_node(*n.a), max_coord_node(*n.b));
  }
}

void print_node(const Expr::Node& n, std::ostringstream& os) {
  switch (n.kind) {
    case Expr::Node::Const: os << n.v; break;
    case Expr::Node::Coord: os << "x" << (n.coord + 1); break;
    case Expr::Node::Add:
      os << "(";
      print_node(*n.a, os);
      os << " + ";
      print_node(*n.b, os);
      os << ")";
      break;
    case Expr::Node::Sub:
      os << "(";
      print_node(*n.a, os);
      os << " - ";
      print_node(*n.b, os);
      os << ")";
      break;
    case Expr::Node::Mul:
      os << "(";
      print_node(*n.a, os);
      os << " * ";
      print_node(*n.b, os);
      os << ")";
      break;
    case Expr::Node::Neg:
      os << "(-";
      print_node(*n.a, os);
      os << ")";
      break;
    case Expr::Node::Pow:
      os << "(";
      print_node(*n.a, os);
      os << "^" << n.exponent << ")";
      break;
  }
}

}  // namespace

Expr Expr::parse(const std::string& text) {
  Parser p(text);
  NodePtr root = p.parse_expr();
  p.skip_ws();
  if (p.pos != text.size()) p.fail("trailing input");
  return Expr(std::move(root));
}

double Expr::eval(const Vec& x) const { return eval_node(*root_, x); }

Expr Expr::derivative(int coord) const { return Expr(diff_node(root_, coord)); }

int Expr::max_coord() const { return max_coord_node(*root_); }

std::string Expr::to_string() const {
  std::ostringstream os;
  print_node(*root_, os);
  return os.str();
}

ScalarField expression_field(const std::string& text, int ambient_dim) {
  Expr e = Expr::parse(text);
  if (e.max_coord() >= ambient_dim)
    throw std::invalid_argument("expression uses coordinate beyond ambient dim");
  auto grads = std::make_shared<std::vector<Expr>>();
  auto hess = std::make_shared<std::vector<Expr>>();
  for (int i = 0; i < ambient_dim; ++i) grads->push_back(e.derivative(i));
  for (int i = 0; i < ambient_dim; ++i)
    for (int j = 0; j < ambient_dim; ++j)
      hess->push_back((*grads)[i].derivative(j));

  ScalarField f;
  f.name = "expr:" + text;
  f.value = [e](int, const Vec& x) { return e.eval(x); };
  f.gradient = [grads, ambient_dim](int, const Vec& x) {
    Vec g(ambient_dim);
    for (int i = 0; i < ambient_dim; ++i) g[i] = (*grads)[i].eval(x);
    return g;
  };
  f.hessian = [hess, ambient_dim](int, const Vec& x) {
    Mat h(ambient_dim, ambient_dim);
    for (int i = 0; i < ambient_dim; ++i)
      for (int j = 0; j < ambient_dim; ++j)
        h(i, j) = (*hess)[i * ambient_dim + j].eval(x);
    return h;
  };
  f.c1_across = true;
  return f;
}

ScalarField make_field(const std::string& spec, const SingularManifold& m) {
  auto starts = [&](const std::string& prefix) {
    return spec.rfind(prefix, 0) == 0;
  };
  if (starts("const:")) return constant_field(std::stod(spec.substr(6)));
  if (starts("coord:")) {
    int k = std::stoi(spec.substr(6));
    if (k < 1 || k > m.ambient_dim())
      throw std::invalid_argument("coord index out of range");
    return coordinate_field(k - 1);
  }
  if (spec == "d1field") return d1_field();
  if (spec == "abs1") return abs_arclength_field(m);
  if (starts("kink:")) {
    std::string rest = spec.substr(5);
    auto colon = rest.find(':');
    if (colon == std::string::npos)
      throw std::invalid_argument("kink field needs two slopes, kink:a1:a2");
    return kinked_field(m, std::stod(rest.substr(0, colon)),
                        std::stod(rest.substr(colon + 1)));
  }
  if (starts("expr:")) return expression_field(spec.substr(5), m.ambient_dim());
  throw std::invalid_argument("unknown field spec: " + spec);
}

}  // namespace laplab
