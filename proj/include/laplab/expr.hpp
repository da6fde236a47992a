#pragma once

#include "laplab/field.hpp"

#include <memory>

namespace laplab {

/// Small arithmetic expressions over ambient coordinates: numeric
/// constants, coordinate variables x1..xN (1-based), +, -, *, ^ with
/// non-negative integer exponents, unary minus and parentheses.
/// Differentiation is symbolic, so parsed fields carry exact gradients
/// and Hessians.
class Expr {
 public:
  struct Node;  // exposed for the parser/printer implementation

  static Expr parse(const std::string& text);

  double eval(const Vec& x) const;
  Expr derivative(int coord) const;  // d/dx_coord (0-based)
  int max_coord() const;             // highest 0-based coordinate used, -1 if none
  std::string to_string() const;

 private:
  std::shared_ptr<const Node> root_;
  explicit Expr(std::shared_ptr<const Node> root) : root_(std::move(root)) {}
};

/// Wraps a parsed expression as an ambient scalar field (same formula on
/// every piece) with symbolic gradient and Hessian.
ScalarField expression_field(const std::string& text, int ambient_dim);

/// Resolves CLI field specs: "const:<c>", "coord:<k>" (1-based),
/// "d1field", "kink:<a1>:<a2>", "abs1", or "expr:<formula>".
ScalarField make_field(const std::string& spec, const SingularManifold& m);

}  // namespace laplab
