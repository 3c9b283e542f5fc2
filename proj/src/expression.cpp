#include "hamshape/expression.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <numbers>
#include <vector>

#include "hamshape/error.hpp"

namespace hamshape {
namespace {

using Node = std::function<Jet(const Vec2&)>;

class Parser {
 public:
  explicit Parser(const std::string& text) : text_(text) {}

  Node parse() {
    Node root = expr();
    skip_space();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& why) const {
    throw config_error("expression '" + text_ + "': " + why + " at column " +
                       std::to_string(pos_ + 1));
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }

  Node expr() {
    Node lhs = term();
    for (;;) {
      if (accept('+')) {
        Node rhs = term();
        lhs = [lhs, rhs](const Vec2& p) { return lhs(p) + rhs(p); };
      } else if (accept('-')) {
        Node rhs = term();
        lhs = [lhs, rhs](const Vec2& p) { return lhs(p) - rhs(p); };
      } else {
        return lhs;
      }
    }
  }

  Node term() {
    Node lhs = unary();
    for (;;) {
      if (accept('*')) {
        Node rhs = unary();
        lhs = [lhs, rhs](const Vec2& p) { return lhs(p) * rhs(p); };
      } else if (accept('/')) {
        Node rhs = unary();
        lhs = [lhs, rhs](const Vec2& p) { return lhs(p) / rhs(p); };
      } else {
        return lhs;
      }
    }
  }

  Node unary() {
    if (accept('-')) {
      Node operand = unary();
      return [operand](const Vec2& p) { return -operand(p); };
    }
    if (accept('+')) return unary();
    return power();
  }

  Node power() {
    Node base = primary();
    if (accept('^')) {
      Node exponent = unary();
      return [base, exponent](const Vec2& p) { return pow(base(p), exponent(p)); };
    }
    return base;
  }

  Node primary() {
    skip_space();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    const char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) return named();
    if (accept('(')) {
      Node inner = expr();
      expect(')');
      return inner;
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  Node number() {
    const char* begin = text_.c_str() + pos_;
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin) fail("malformed number");
    pos_ += static_cast<std::size_t>(end - begin);
    return [v](const Vec2&) { return Jet::constant(v); };
  }

  Node named() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
      ++pos_;
    }
    const std::string name = text_.substr(start, pos_ - start);
    if (name == "x1") return [](const Vec2& p) { return Jet::x1(p); };
    if (name == "x2") return [](const Vec2& p) { return Jet::x2(p); };
    if (name == "pi") return [](const Vec2&) { return Jet::constant(std::numbers::pi); };
    static const std::vector<std::string> kFunctions = {"min", "max", "sin", "cos",
                                                        "exp", "sqrt", "abs"};
    if (std::find(kFunctions.begin(), kFunctions.end(), name) == kFunctions.end()) {
      pos_ = start;
      fail("unknown identifier '" + name + "'");
    }

    std::vector<Node> args;
    expect('(');
    args.push_back(expr());
    while (accept(',')) args.push_back(expr());
    expect(')');

    if (name == "min" || name == "max") {
      if (args.size() < 2) fail(name + " needs at least two arguments");
      const bool is_max = name == "max";
      return [args, is_max](const Vec2& p) {
        Jet acc = args.front()(p);
        for (std::size_t i = 1; i < args.size(); ++i) {
          acc = is_max ? max(acc, args[i](p)) : min(acc, args[i](p));
        }
        return acc;
      };
    }
    if (args.size() != 1) fail(name + " takes exactly one argument");
    Node a = args.front();
    if (name == "sin") return [a](const Vec2& p) { return sin(a(p)); };
    if (name == "cos") return [a](const Vec2& p) { return cos(a(p)); };
    if (name == "exp") return [a](const Vec2& p) { return exp(a(p)); };
    if (name == "sqrt") return [a](const Vec2& p) { return sqrt(a(p)); };
    return [a](const Vec2& p) { return abs(a(p)); };
  }

  const std::string& text_;
  std::size_t pos_ = 0;
};

}  // namespace

ScalarFunction parse_expression(const std::string& text) {
  Parser parser(text);
  return ScalarFunction(parser.parse(), text);
}

}  // namespace hamshape
