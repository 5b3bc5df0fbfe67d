#pragma once

// Small closed grammar for right-hand sides, analytic solutions and conserved
// quantities:
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := ('+' | '-') unary | power
//   power   := primary ('^' unary)?          exponent must be constant
//   primary := number | 'x' | 'y'<k> | func '(' expr ')' | '(' expr ')'
//   func    := sin | cos | exp
//
// State components are 1-based: y1 .. yn.

#include "pwnn/autodiff.hpp"
#include "pwnn/errors.hpp"

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pwnn {

namespace detail {
inline double lift(double, double c) { return c; }
inline ad::Var lift(ad::Var like, double c) { return like.tape()->constant(c); }
}  // namespace detail

class Expression {
public:
    enum class Kind { Number, X, Y, Add, Sub, Mul, Div, Neg, Sin, Cos, Exp, Pow };

    struct Node {
        Kind kind = Kind::Number;
        double number = 0.0;   // literal value, or the exponent of Pow
        std::size_t index = 0; // 0-based component for Y
        int lhs = -1;
        int rhs = -1;
    };

    Expression() = default;

    /// Throws ParseError; components above `dimension` are rejected.
    static Expression parse(std::string_view text, std::size_t dimension);

    const std::string& source() const { return source_; }
    bool uses_state() const;
    bool uses_x() const;

    template <class T>
    T evaluate(const T& x, std::span<const T> y) const {
        if (root_ < 0) throw Error("evaluating an empty expression");
        return eval(root_, x, y);
    }

    double operator()(double x, std::span<const double> y) const { return evaluate<double>(x, y); }

private:
    template <class T>
    T eval(int i, const T& x, std::span<const T> y) const {
        using std::cos;
        using std::exp;
        using std::pow;
        using std::sin;
        const Node& n = nodes_[static_cast<std::size_t>(i)];
        switch (n.kind) {
            case Kind::Number: return detail::lift(x, n.number);
            case Kind::X: return x;
            case Kind::Y: return y[n.index];
            case Kind::Add: return eval(n.lhs, x, y) + eval(n.rhs, x, y);
            case Kind::Sub: return eval(n.lhs, x, y) - eval(n.rhs, x, y);
            case Kind::Mul: return eval(n.lhs, x, y) * eval(n.rhs, x, y);
            case Kind::Div: return eval(n.lhs, x, y) / eval(n.rhs, x, y);
            case Kind::Neg: return -eval(n.lhs, x, y);
            case Kind::Sin: return sin(eval(n.lhs, x, y));
            case Kind::Cos: return cos(eval(n.lhs, x, y));
            case Kind::Exp: return exp(eval(n.lhs, x, y));
            case Kind::Pow: return pow(eval(n.lhs, x, y), n.number);
        }
        return x;
    }

    friend class ExpressionParser;

    std::string source_;
    std::vector<Node> nodes_;
    int root_ = -1;
};

}  // namespace pwnn
