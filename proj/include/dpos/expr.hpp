#pragma once

// Elementary-function expression trees for user-defined vector fields.
//
// Grammar (usual precedence, right-associative power):
//   expr   := term (('+' | '-') term)*
//   term   := unary (('*' | '/') unary)*
//   unary  := ('-' | '+') unary | power
//   power  := atom (('^' | '**') unary)?
//   atom   := number | name | name '(' expr ')' | '(' expr ')'
// Functions: sin cos tan tanh exp log sqrt. Constant: pi.

#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dpos {

class Expr {
public:
    enum class Op { Const, Var, Add, Sub, Mul, Div, Neg, Pow, Sin, Cos, Tan, Tanh, Exp, Log, Sqrt };

    Expr() : Expr(constant(0.0)) {}

    [[nodiscard]] static Expr constant(double value);
    [[nodiscard]] static Expr variable(int index, std::string name);

    [[nodiscard]] double eval(std::span<const double> vars) const;

    /// Symbolic partial derivative with respect to variable `index`.
    [[nodiscard]] Expr derivative(int index) const;

    [[nodiscard]] std::string str() const;
    [[nodiscard]] Op op() const;
    [[nodiscard]] bool is_constant(double value) const;

    friend Expr operator+(const Expr& a, const Expr& b);
    friend Expr operator-(const Expr& a, const Expr& b);
    friend Expr operator*(const Expr& a, const Expr& b);
    friend Expr operator/(const Expr& a, const Expr& b);
    friend Expr operator-(const Expr& a);
    friend Expr pow(const Expr& a, const Expr& b);
    friend Expr apply(Op fn, const Expr& a);

    struct Node;  // opaque tree node

private:
    explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
    std::shared_ptr<const Node> node_;
};

struct SymbolTable {
    std::vector<std::string> variables;    ///< bound to eval() slots in order
    std::map<std::string, double> constants;
};

/// Throws Error(ConfigParse) with the 1-based column of the offending token.
[[nodiscard]] Expr parse_expression(std::string_view text, const SymbolTable& symbols);

}  // namespace dpos
