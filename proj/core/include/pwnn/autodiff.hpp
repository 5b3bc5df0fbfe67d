#pragma once

// Scalar tape carrying a value and a forward tangent (d/dx of the value with
// respect to the input leaf of its subgraph) per node. The reverse sweep keeps
// two adjoints per node, one for the value and one for the tangent, so a loss
// built from tangents (network derivatives) is still differentiable with
// respect to the parameters.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace pwnn::ad {

enum class Op : std::uint8_t {
    Input,
    Parameter,
    Constant,
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Square,
    Tanh,
    Sin,
    Cos,
    Exp,
    PowConst,
    Affine,
    Sum,
    TangentOf,
};

class Tape;

/// Handle to a node on a tape. Cheap to copy; only valid while the tape lives
/// and has not been cleared.
class Var {
public:
    Var() = default;
    Var(Tape* tape, std::uint32_t index) : tape_(tape), index_(index) {}

    Tape* tape() const { return tape_; }
    std::uint32_t index() const { return index_; }
    double value() const;
    double tangent() const;

private:
    Tape* tape_ = nullptr;
    std::uint32_t index_ = 0;
};

/// Contiguous run of nodes, e.g. all parameters of a network or all
/// activations of one layer.
struct VarRange {
    std::uint32_t first = 0;
    std::uint32_t count = 0;

    Var at(Tape* tape, std::size_t i) const { return {tape, first + static_cast<std::uint32_t>(i)}; }
};

class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    // Leaves.
    Var input(double x);
    Var parameter(double v);
    VarRange parameters(std::span<const double> values);
    Var constant(double v);

    // Elementary operations; each records one node and computes it eagerly.
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);
    Var div(Var a, Var b);
    Var neg(Var a);
    Var square(Var a);
    Var tanh(Var a);
    Var sin(Var a);
    Var cos(Var a);
    Var exp(Var a);
    Var pow(Var a, double exponent);
    /// bias + sum_k weights[k] * inputs[k]. Weights must be parameter or
    /// constant leaves (tangent identically zero).
    Var affine(Var bias, VarRange weights, VarRange inputs);
    Var sum(std::span<const Var> terms);
    /// Promotes the tangent of `a` to a value. The tangent of the result is
    /// zero: second derivatives in x are not tracked.
    Var tangent_of(Var a);

    /// Recompute every non-leaf node in recording order from the current leaf
    /// values. Throws DivergenceError with the op index on the first
    /// non-finite node.
    void forward();

    /// Reverse sweep seeded with d(output)/d(output) = 1 on the value adjoint.
    void backward(Var output);

    void set_value(Var leaf, double v);
    void set_values(VarRange leaves, std::span<const double> values);

    double value(Var v) const { return value_[v.index()]; }
    double tangent(Var v) const { return tangent_[v.index()]; }
    /// d(seeded output)/d(value of v) after backward().
    double adjoint(Var v) const { return adj_value_[v.index()]; }
    double tangent_adjoint(Var v) const { return adj_tangent_[v.index()]; }
    Op op(std::size_t index) const { return op_[index]; }

    /// Copies value adjoints of a leaf range; throws DivergenceError on a
    /// non-finite entry.
    void gradient(VarRange leaves, std::span<double> out) const;

    std::size_t size() const { return op_.size(); }
    void clear();

private:
    struct AffineOperands {
        std::uint32_t weights;
        std::uint32_t inputs;
        std::uint32_t count;
    };

    Var push(Op op, std::uint32_t a, std::uint32_t b, double aux);
    void compute(std::size_t i);
    void check_finite(std::size_t i) const;
    void check_same_tape(Var a) const;

    std::vector<Op> op_;
    std::vector<std::uint8_t> active_;  // depends on at least one parameter leaf
    std::vector<std::uint32_t> lhs_;
    std::vector<std::uint32_t> rhs_;
    std::vector<double> aux_;
    std::vector<double> value_;
    std::vector<double> tangent_;
    std::vector<double> adj_value_;
    std::vector<double> adj_tangent_;
    std::vector<AffineOperands> affine_;
    std::vector<std::uint32_t> sum_operands_;  // Sum: rhs_ = begin, aux_ = count
};

Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var operator*(Var a, Var b);
Var operator/(Var a, Var b);
Var operator-(Var a);
Var operator+(Var a, double b);
Var operator+(double a, Var b);
Var operator-(Var a, double b);
Var operator-(double a, Var b);
Var operator*(Var a, double b);
Var operator*(double a, Var b);
Var operator/(Var a, double b);
Var operator/(double a, Var b);

Var tanh(Var a);
Var sin(Var a);
Var cos(Var a);
Var exp(Var a);
Var square(Var a);
Var pow(Var a, double exponent);
Var tangent_of(Var a);

struct ValueAndTangent {
    double value;
    double tangent;
};

/// Loads `x` into `input` and `values` into `params`, replays the tape and
/// returns the value and d/dx of `output`.
ValueAndTangent forward_with_tangent(Tape& tape, Var output, Var input, double x, VarRange params,
                                     std::span<const double> values);

/// Loads `values` into `params`, replays the tape, runs the reverse sweep from
/// the scalar `loss` and writes d(loss)/d(params) into `out`. Returns the loss.
double gradient(Tape& tape, Var loss, VarRange params, std::span<const double> values,
                std::span<double> out);

}  // namespace pwnn::ad
