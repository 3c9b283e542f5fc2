#pragma once

#include <functional>
#include <memory>
#include <string>

#include <Eigen/Core>

namespace hamshape {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Second-order jet of a scalar function of (x1, x2): value, gradient and
/// Hessian at one point. Arithmetic on jets propagates derivatives exactly,
/// which is how analytic level sets obtain the Hessian needed by the
/// system in variations.
struct Jet {
  double value = 0.0;
  double dx = 0.0;
  double dy = 0.0;
  double dxx = 0.0;
  double dxy = 0.0;
  double dyy = 0.0;

  static Jet constant(double c) { return Jet{c}; }
  static Jet x1(const Vec2& p) { return Jet{p.x(), 1.0, 0.0}; }
  static Jet x2(const Vec2& p) { return Jet{p.y(), 0.0, 1.0}; }

  Vec2 gradient() const { return {dx, dy}; }
  Mat2 hessian() const {
    Mat2 h;
    h << dxx, dxy, dxy, dyy;
    return h;
  }
};

Jet operator+(const Jet& a, const Jet& b);
Jet operator-(const Jet& a, const Jet& b);
Jet operator-(const Jet& a);
Jet operator*(const Jet& a, const Jet& b);
Jet operator/(const Jet& a, const Jet& b);
Jet operator*(double s, const Jet& a);

// Applies a scalar function with first/second derivative f1, f2 at a.value.
Jet chain(const Jet& a, double f0, double f1, double f2);

Jet pow(const Jet& base, const Jet& exponent);
Jet sin(const Jet& a);
Jet cos(const Jet& a);
Jet exp(const Jet& a);
Jet sqrt(const Jet& a);
Jet abs(const Jet& a);
// Active-branch selection; ties go to the first argument.
Jet min(const Jet& a, const Jet& b);
Jet max(const Jet& a, const Jet& b);

/// Analytic scalar field on the plane, evaluated as a Jet. Cheap to copy.
class ScalarFunction {
 public:
  using Impl = std::function<Jet(const Vec2&)>;

  ScalarFunction();  // identically zero
  explicit ScalarFunction(Impl impl, std::string label = "<fn>");

  static ScalarFunction constant(double c);
  static ScalarFunction parse(const std::string& expression);

  Jet operator()(const Vec2& p) const { return (*impl_)(p); }
  double value(const Vec2& p) const { return (*impl_)(p).value; }
  Vec2 gradient(const Vec2& p) const { return (*impl_)(p).gradient(); }

  const std::string& label() const { return label_; }

  friend ScalarFunction operator+(const ScalarFunction& a, const ScalarFunction& b);
  friend ScalarFunction operator*(double s, const ScalarFunction& a);

 private:
  std::shared_ptr<const Impl> impl_;
  std::string label_;
};

}  // namespace hamshape
