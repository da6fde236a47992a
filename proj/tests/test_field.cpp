#include <doctest.h>

#include "laplab/expr.hpp"

#include <numbers>

using namespace laplab;

TEST_CASE("expression parse, eval, derivatives") {
  Expr e = Expr::parse("(x1 + 0.2)^2 + x2^2");
  Vec x(2);
  x << 0.3, -0.4;
  CHECK(e.eval(x) == doctest::Approx(0.25 + 0.16));
  CHECK(e.derivative(0).eval(x) == doctest::Approx(1.0));
  CHECK(e.derivative(1).eval(x) == doctest::Approx(-0.8));
  CHECK(e.derivative(0).derivative(0).eval(x) == doctest::Approx(2.0));
  CHECK(e.derivative(0).derivative(1).eval(x) == doctest::Approx(0.0));
  CHECK(e.max_coord() == 1);

  Expr m = Expr::parse("2*x1*x2 - 3");
  CHECK(m.eval(x) == doctest::Approx(2 * 0.3 * -0.4 - 3));
  CHECK(m.derivative(0).eval(x) == doctest::Approx(-0.8));

  CHECK_THROWS_AS(Expr::parse("x1 +"), std::invalid_argument);
  CHECK_THROWS_AS(Expr::parse("x0"), std::invalid_argument);
  CHECK_THROWS_AS(Expr::parse("x1^-2"), std::invalid_argument);
  CHECK_THROWS_AS(Expr::parse("y"), std::invalid_argument);
}

TEST_CASE("expression field exposes exact gradient and Hessian") {
  ScalarField f = expression_field("x1^3 + x1*x2", 2);
  Vec x(2);
  x << 2.0, 5.0;
  CHECK(f.value(0, x) == doctest::Approx(8 + 10));
  Vec g = f.gradient(0, x);
  CHECK(g[0] == doctest::Approx(3 * 4 + 5));
  CHECK(g[1] == doctest::Approx(2.0));
  Mat h = f.hessian(0, x);
  CHECK(h(0, 0) == doctest::Approx(12.0));
  CHECK(h(0, 1) == doctest::Approx(1.0));
  CHECK(h(1, 0) == doctest::Approx(1.0));
  CHECK(h(1, 1) == doctest::Approx(0.0));
}

TEST_CASE("d1 preset equals its expression form") {
  ScalarField preset = d1_field();
  ScalarField parsed = expression_field("(x1 + 0.2)^2 + x2^2", 2);
  Vec x(2);
  x << 0.7, -1.3;
  CHECK(preset.value(0, x) == doctest::Approx(parsed.value(0, x)));
  CHECK((preset.gradient(0, x) - parsed.gradient(0, x)).norm() < 1e-14);
}

TEST_CASE("kinked field is continuous at the apex, C1 only when slopes agree") {
  SingularManifold m =
      build_builtin("glued_halflines", {{"theta", 3 * std::numbers::pi / 4}});
  ScalarField f = kinked_field(m, 0.7, -0.4);
  check_field_continuity(m, f);
  CHECK_FALSE(f.c1_across);
  Vec apex(2);
  apex << 0.0, 0.0;
  CHECK(f.value(0, apex) == doctest::Approx(0.0));
  CHECK(f.value(1, apex) == doctest::Approx(0.0));
  // Slopes along each inward direction.
  const auto& edge = m.singularities.front();
  CHECK(f.deriv(0, apex, edge.inward[0]) == doctest::Approx(0.7));
  CHECK(f.deriv(1, apex, edge.inward[1]) == doctest::Approx(-0.4));
}

TEST_CASE("field continuity check rejects mismatched piece values") {
  SingularManifold m = build_builtin("glued_halflines");
  ScalarField broken;
  broken.value = [](int piece, const Vec&) { return piece == 0 ? 0.0 : 1.0; };
  broken.gradient = [](int, const Vec& x) { return Vec(Vec::Zero(x.size())); };
  CHECK_THROWS_AS(check_field_continuity(m, broken), std::invalid_argument);
}

TEST_CASE("make_field resolves the CLI specs") {
  SingularManifold m = build_builtin("crossing_segments");
  CHECK(make_field("const:2.5", m).value(0, Vec::Zero(2)) == doctest::Approx(2.5));
  CHECK(make_field("coord:2", m).name == "coord:2");
  CHECK(make_field("d1field", m).name == "d1field");
  CHECK(make_field("abs1", m).name == "abs1");
  CHECK(make_field("expr:x1^2", m).value(0, Vec::Ones(2)) == doctest::Approx(1.0));
  CHECK_THROWS_AS(make_field("coord:3", m), std::invalid_argument);
  CHECK_THROWS_AS(make_field("nonsense", m), std::invalid_argument);
}

TEST_CASE("laplacian_on computes the tangential Hessian trace") {
  SingularManifold m = build_builtin("rectangle");
  ScalarField f = d1_field();
  Vec x(3);
  x << 0.1, 0.2, 0.0;
  CHECK(f.laplacian_on(m.pieces[0].affine_frame, 0, x) == doctest::Approx(4.0));
}
