#pragma once

#include <string>

#include "hamshape/function.hpp"

namespace hamshape {

// Parses a level-set expression in the variables x1, x2.
//
// Grammar (usual precedence, '^' binds tightest and is right-associative,
// unary minus binds looser than '^' so -x1^2 == -(x1^2)):
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := ('+' | '-') unary | power
//   power   := primary ('^' unary)?
//   primary := number | x1 | x2 | pi | name '(' expr (',' expr)* ')' | '(' expr ')'
//
// Functions: min, max (two or more arguments), sin, cos, exp, sqrt, abs.
// Throws a config Error with the offending column on malformed input.
ScalarFunction parse_expression(const std::string& text);

}  // namespace hamshape
