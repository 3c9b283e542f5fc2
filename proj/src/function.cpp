#include "hamshape/function.hpp"

#include <cmath>

#include "hamshape/expression.hpp"

namespace hamshape {

Jet operator+(const Jet& a, const Jet& b) {
  return {a.value + b.value, a.dx + b.dx, a.dy + b.dy,
          a.dxx + b.dxx, a.dxy + b.dxy, a.dyy + b.dyy};
}

Jet operator-(const Jet& a, const Jet& b) {
  return {a.value - b.value, a.dx - b.dx, a.dy - b.dy,
          a.dxx - b.dxx, a.dxy - b.dxy, a.dyy - b.dyy};
}

Jet operator-(const Jet& a) {
  return {-a.value, -a.dx, -a.dy, -a.dxx, -a.dxy, -a.dyy};
}

Jet operator*(const Jet& a, const Jet& b) {
  return {a.value * b.value,
          a.dx * b.value + a.value * b.dx,
          a.dy * b.value + a.value * b.dy,
          a.dxx * b.value + 2.0 * a.dx * b.dx + a.value * b.dxx,
          a.dxy * b.value + a.dx * b.dy + a.dy * b.dx + a.value * b.dxy,
          a.dyy * b.value + 2.0 * a.dy * b.dy + a.value * b.dyy};
}

Jet operator*(double s, const Jet& a) {
  return {s * a.value, s * a.dx, s * a.dy, s * a.dxx, s * a.dxy, s * a.dyy};
}

Jet chain(const Jet& a, double f0, double f1, double f2) {
  return {f0,
          f1 * a.dx,
          f1 * a.dy,
          f2 * a.dx * a.dx + f1 * a.dxx,
          f2 * a.dx * a.dy + f1 * a.dxy,
          f2 * a.dy * a.dy + f1 * a.dyy};
}

Jet operator/(const Jet& a, const Jet& b) {
  const double v = b.value;
  return a * chain(b, 1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v));
}

namespace {

bool is_constant(const Jet& j) {
  return j.dx == 0.0 && j.dy == 0.0 && j.dxx == 0.0 && j.dxy == 0.0 && j.dyy == 0.0;
}

}  // namespace

Jet pow(const Jet& base, const Jet& exponent) {
  if (is_constant(exponent)) {
    const double c = exponent.value;
    const double b = base.value;
    if (c == 0.0) return Jet::constant(1.0);
    if (c == 1.0) return base;
    if (c == 2.0) return base * base;
    return chain(base, std::pow(b, c), c * std::pow(b, c - 1.0),
                 c * (c - 1.0) * std::pow(b, c - 2.0));
  }
  // General case through exp(e * log b); only defined for positive bases.
  const double b = base.value;
  const Jet log_b = chain(base, std::log(b), 1.0 / b, -1.0 / (b * b));
  return exp(exponent * log_b);
}

Jet sin(const Jet& a) {
  const double s = std::sin(a.value), c = std::cos(a.value);
  return chain(a, s, c, -s);
}

Jet cos(const Jet& a) {
  const double s = std::sin(a.value), c = std::cos(a.value);
  return chain(a, c, -s, -c);
}

Jet exp(const Jet& a) {
  const double e = std::exp(a.value);
  return chain(a, e, e, e);
}

Jet sqrt(const Jet& a) {
  const double r = std::sqrt(a.value);
  return chain(a, r, 0.5 / r, -0.25 / (r * a.value));
}

Jet abs(const Jet& a) { return a.value < 0.0 ? -a : a; }

Jet min(const Jet& a, const Jet& b) { return b.value < a.value ? b : a; }

Jet max(const Jet& a, const Jet& b) { return b.value > a.value ? b : a; }

ScalarFunction::ScalarFunction() : ScalarFunction([](const Vec2&) { return Jet{}; }, "0") {}

ScalarFunction::ScalarFunction(Impl impl, std::string label)
    : impl_(std::make_shared<const Impl>(std::move(impl))), label_(std::move(label)) {}

ScalarFunction ScalarFunction::constant(double c) {
  return ScalarFunction([c](const Vec2&) { return Jet::constant(c); }, std::to_string(c));
}

ScalarFunction ScalarFunction::parse(const std::string& expression) {
  return parse_expression(expression);
}

ScalarFunction operator+(const ScalarFunction& a, const ScalarFunction& b) {
  auto fa = a.impl_, fb = b.impl_;
  return ScalarFunction([fa, fb](const Vec2& p) { return (*fa)(p) + (*fb)(p); },
                        "(" + a.label_ + ")+(" + b.label_ + ")");
}

ScalarFunction operator*(double s, const ScalarFunction& a) {
  auto fa = a.impl_;
  return ScalarFunction([s, fa](const Vec2& p) { return s * (*fa)(p); },
                        std::to_string(s) + "*(" + a.label_ + ")");
}

}  // namespace hamshape
