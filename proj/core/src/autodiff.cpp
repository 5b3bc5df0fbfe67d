#include "pwnn/autodiff.hpp"

#include "pwnn/errors.hpp"

#include "dot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace pwnn::ad {

namespace {

constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();

bool is_leaf(Op op) { return op == Op::Input || op == Op::Parameter || op == Op::Constant; }

const char* op_name(Op op) {
    switch (op) {
        case Op::Input: return "input";
        case Op::Parameter: return "parameter";
        case Op::Constant: return "constant";
        case Op::Add: return "add";
        case Op::Sub: return "sub";
        case Op::Mul: return "mul";
        case Op::Div: return "div";
        case Op::Neg: return "neg";
        case Op::Square: return "square";
        case Op::Tanh: return "tanh";
        case Op::Sin: return "sin";
        case Op::Cos: return "cos";
        case Op::Exp: return "exp";
        case Op::PowConst: return "pow";
        case Op::Affine: return "affine";
        case Op::Sum: return "sum";
        case Op::TangentOf: return "tangent";
    }
    return "?";
}

// d/du u^p and d2/du2 u^p with the p = 0, 1 cases kept finite at u = 0.
double pow_d1(double u, double p) { return p == 0.0 ? 0.0 : p * std::pow(u, p - 1.0); }
double pow_d2(double u, double p) {
    return (p == 0.0 || p == 1.0) ? 0.0 : p * (p - 1.0) * std::pow(u, p - 2.0);
}

}  // namespace

double Var::value() const { return tape_->value(*this); }
double Var::tangent() const { return tape_->tangent(*this); }

Var Tape::push(Op op, std::uint32_t a, std::uint32_t b, double aux) {
    const auto index = static_cast<std::uint32_t>(op_.size());
    op_.push_back(op);
    std::uint8_t active = op == Op::Parameter ? 1 : 0;
    if (op == Op::Affine) {
        const AffineOperands& ops = affine_[b];
        active = active_[a];
        for (std::uint32_t k = 0; k < ops.count && !active; ++k) {
            active = active_[ops.weights + k] | active_[ops.inputs + k];
        }
    } else if (op == Op::Sum) {
        for (std::uint32_t k = 0; k < a && !active; ++k) active = active_[sum_operands_[b + k]];
    } else if (!is_leaf(op)) {
        active = active_[a] | (b != kNone ? active_[b] : std::uint8_t{0});
    }
    active_.push_back(active);
    lhs_.push_back(a);
    rhs_.push_back(b);
    aux_.push_back(aux);
    value_.push_back(0.0);
    tangent_.push_back(0.0);
    adj_value_.push_back(0.0);
    adj_tangent_.push_back(0.0);
    return {this, index};
}

void Tape::check_same_tape(Var a) const {
    if (a.tape() != this || a.index() >= op_.size()) {
        throw Error("autodiff: variable does not belong to this tape");
    }
}

Var Tape::input(double x) {
    Var v = push(Op::Input, kNone, kNone, 0.0);
    value_[v.index()] = x;
    tangent_[v.index()] = 1.0;
    return v;
}

Var Tape::parameter(double p) {
    Var v = push(Op::Parameter, kNone, kNone, 0.0);
    value_[v.index()] = p;
    return v;
}

VarRange Tape::parameters(std::span<const double> values) {
    VarRange range{static_cast<std::uint32_t>(op_.size()), static_cast<std::uint32_t>(values.size())};
    for (double p : values) parameter(p);
    return range;
}

Var Tape::constant(double c) {
    Var v = push(Op::Constant, kNone, kNone, 0.0);
    value_[v.index()] = c;
    return v;
}

#define PWNN_BINARY(name, OP)                              \
    Var Tape::name(Var a, Var b) {                         \
        check_same_tape(a);                                \
        check_same_tape(b);                                \
        Var v = push(Op::OP, a.index(), b.index(), 0.0);   \
        compute(v.index());                                \
        return v;                                          \
    }
#define PWNN_UNARY(name, OP)                               \
    Var Tape::name(Var a) {                                \
        check_same_tape(a);                                \
        Var v = push(Op::OP, a.index(), kNone, 0.0);       \
        compute(v.index());                                \
        return v;                                          \
    }

PWNN_BINARY(add, Add)
PWNN_BINARY(sub, Sub)
PWNN_BINARY(mul, Mul)
PWNN_BINARY(div, Div)
PWNN_UNARY(neg, Neg)
PWNN_UNARY(square, Square)
PWNN_UNARY(tanh, Tanh)
PWNN_UNARY(sin, Sin)
PWNN_UNARY(cos, Cos)
PWNN_UNARY(exp, Exp)
PWNN_UNARY(tangent_of, TangentOf)

#undef PWNN_BINARY
#undef PWNN_UNARY

Var Tape::pow(Var a, double exponent) {
    check_same_tape(a);
    Var v = push(Op::PowConst, a.index(), kNone, exponent);
    compute(v.index());
    return v;
}

Var Tape::affine(Var bias, VarRange weights, VarRange inputs) {
    check_same_tape(bias);
    if (weights.count != inputs.count) {
        throw ShapeError("autodiff: affine weight/input count mismatch");
    }
    const std::size_t end = op_.size();
    if (weights.first + std::size_t{weights.count} > end || inputs.first + std::size_t{inputs.count} > end) {
        throw Error("autodiff: affine operand range out of bounds");
    }
    for (std::uint32_t k = 0; k < weights.count; ++k) {
        const Op w = op_[weights.first + k];
        if (w != Op::Parameter && w != Op::Constant) {
            throw Error("autodiff: affine weights must be parameter or constant leaves");
        }
    }
    const bool disjoint = weights.first + weights.count <= inputs.first || inputs.first + inputs.count <= weights.first;
    if (!disjoint) throw Error("autodiff: affine weight and input ranges overlap");
    const auto slot = static_cast<std::uint32_t>(affine_.size());
    affine_.push_back({weights.first, inputs.first, weights.count});
    Var v = push(Op::Affine, bias.index(), slot, 0.0);
    compute(v.index());
    return v;
}

Var Tape::sum(std::span<const Var> terms) {
    const auto begin = static_cast<std::uint32_t>(sum_operands_.size());
    for (Var t : terms) {
        check_same_tape(t);
        sum_operands_.push_back(t.index());
    }
    Var v = push(Op::Sum, static_cast<std::uint32_t>(terms.size()), begin, 0.0);
    compute(v.index());
    return v;
}

void Tape::compute(std::size_t i) {
    const std::uint32_t a = lhs_[i];
    const std::uint32_t b = rhs_[i];
    double& y = value_[i];
    double& t = tangent_[i];
    switch (op_[i]) {
        case Op::Input:
        case Op::Parameter:
        case Op::Constant:
            return;
        case Op::Add:
            y = value_[a] + value_[b];
            t = tangent_[a] + tangent_[b];
            break;
        case Op::Sub:
            y = value_[a] - value_[b];
            t = tangent_[a] - tangent_[b];
            break;
        case Op::Mul:
            y = value_[a] * value_[b];
            t = tangent_[a] * value_[b] + value_[a] * tangent_[b];
            break;
        case Op::Div:
            y = value_[a] / value_[b];
            t = (tangent_[a] - y * tangent_[b]) / value_[b];
            break;
        case Op::Neg:
            y = -value_[a];
            t = -tangent_[a];
            break;
        case Op::Square:
            y = value_[a] * value_[a];
            t = 2.0 * value_[a] * tangent_[a];
            break;
        case Op::Tanh:
            y = std::tanh(value_[a]);
            t = (1.0 - y * y) * tangent_[a];
            break;
        case Op::Sin:
            y = std::sin(value_[a]);
            t = std::cos(value_[a]) * tangent_[a];
            break;
        case Op::Cos:
            y = std::cos(value_[a]);
            t = -std::sin(value_[a]) * tangent_[a];
            break;
        case Op::Exp:
            y = std::exp(value_[a]);
            t = y * tangent_[a];
            break;
        case Op::PowConst:
            y = std::pow(value_[a], aux_[i]);
            t = pow_d1(value_[a], aux_[i]) * tangent_[a];
            break;
        case Op::Affine: {
            const AffineOperands& ops = affine_[b];
            const double* w = value_.data() + ops.weights;
            const double* u = value_.data() + ops.inputs;
            const double* du = tangent_.data() + ops.inputs;
            y = value_[a] + detail::dot(w, u, ops.count);
            t = tangent_[a] + detail::dot(w, du, ops.count);
            break;
        }
        case Op::Sum: {
            const std::uint32_t* idx = sum_operands_.data() + b;
            double acc = 0.0;
            double dacc = 0.0;
            for (std::uint32_t k = 0; k < a; ++k) {
                acc += value_[idx[k]];
                dacc += tangent_[idx[k]];
            }
            y = acc;
            t = dacc;
            break;
        }
        case Op::TangentOf:
            y = tangent_[a];
            t = 0.0;
            break;
    }
    check_finite(i);
}

void Tape::check_finite(std::size_t i) const {
    if (!std::isfinite(value_[i]) || !std::isfinite(tangent_[i])) {
        DivergenceError::Context ctx;
        ctx.op_index = i;
        throw DivergenceError(std::string("non-finite result of ") + op_name(op_[i]), ctx);
    }
}

void Tape::forward() {
    const std::size_t n = op_.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (!is_leaf(op_[i])) compute(i);
    }
}

void Tape::backward(Var output) {
    check_same_tape(output);
    const std::size_t top = output.index();
    std::fill(adj_value_.begin(), adj_value_.begin() + static_cast<std::ptrdiff_t>(top + 1), 0.0);
    std::fill(adj_tangent_.begin(), adj_tangent_.begin() + static_cast<std::ptrdiff_t>(top + 1), 0.0);
    adj_value_[top] = 1.0;

    for (std::size_t i = top + 1; i-- > 0;) {
        const double gv = adj_value_[i];
        const double gt = adj_tangent_[i];
        if (!active_[i] || (gv == 0.0 && gt == 0.0)) continue;
        const std::uint32_t a = lhs_[i];
        const std::uint32_t b = rhs_[i];
        switch (op_[i]) {
            case Op::Input:
            case Op::Parameter:
            case Op::Constant:
                break;
            case Op::Add:
                adj_value_[a] += gv;
                adj_tangent_[a] += gt;
                adj_value_[b] += gv;
                adj_tangent_[b] += gt;
                break;
            case Op::Sub:
                adj_value_[a] += gv;
                adj_tangent_[a] += gt;
                adj_value_[b] -= gv;
                adj_tangent_[b] -= gt;
                break;
            case Op::Mul: {
                const double ua = value_[a], ta = tangent_[a];
                const double ub = value_[b], tb = tangent_[b];
                adj_value_[a] += gv * ub + gt * tb;
                adj_tangent_[a] += gt * ub;
                adj_value_[b] += gv * ua + gt * ta;
                adj_tangent_[b] += gt * ua;
                break;
            }
            case Op::Div: {
                // y = u/w, y' = u'/w - u w'/w^2
                const double u = value_[a], du = tangent_[a];
                const double w = value_[b], dw = tangent_[b];
                const double inv = 1.0 / w;
                const double inv2 = inv * inv;
                adj_value_[a] += gv * inv - gt * dw * inv2;
                adj_tangent_[a] += gt * inv;
                adj_value_[b] += -gv * u * inv2 + gt * (-du * inv2 + 2.0 * u * dw * inv2 * inv);
                adj_tangent_[b] += -gt * u * inv2;
                break;
            }
            case Op::Neg:
                adj_value_[a] -= gv;
                adj_tangent_[a] -= gt;
                break;
            case Op::Square: {
                const double u = value_[a], du = tangent_[a];
                adj_value_[a] += gv * 2.0 * u + gt * 2.0 * du;
                adj_tangent_[a] += gt * 2.0 * u;
                break;
            }
            case Op::Tanh: {
                const double s = value_[i];
                const double d = 1.0 - s * s;
                adj_value_[a] += gv * d - gt * tangent_[a] * 2.0 * s * d;
                adj_tangent_[a] += gt * d;
                break;
            }
            case Op::Sin: {
                const double c = std::cos(value_[a]), s = value_[i];
                adj_value_[a] += gv * c - gt * tangent_[a] * s;
                adj_tangent_[a] += gt * c;
                break;
            }
            case Op::Cos: {
                const double s = std::sin(value_[a]), c = value_[i];
                adj_value_[a] += -gv * s - gt * tangent_[a] * c;
                adj_tangent_[a] += -gt * s;
                break;
            }
            case Op::Exp: {
                const double e = value_[i];
                adj_value_[a] += gv * e + gt * tangent_[a] * e;
                adj_tangent_[a] += gt * e;
                break;
            }
            case Op::PowConst: {
                const double u = value_[a], p = aux_[i];
                const double d1 = pow_d1(u, p);
                adj_value_[a] += gv * d1 + gt * tangent_[a] * pow_d2(u, p);
                adj_tangent_[a] += gt * d1;
                break;
            }
            case Op::Affine: {
                adj_value_[a] += gv;
                adj_tangent_[a] += gt;
                const AffineOperands& ops = affine_[b];
                const double* __restrict__ w = value_.data() + ops.weights;
                const double* __restrict__ u = value_.data() + ops.inputs;
                const double* __restrict__ du = tangent_.data() + ops.inputs;
                double* __restrict__ gw = adj_value_.data() + ops.weights;
                double* __restrict__ gu = adj_value_.data() + ops.inputs;
                double* __restrict__ gdu = adj_tangent_.data() + ops.inputs;
                for (std::uint32_t k = 0; k < ops.count; ++k) {
                    gw[k] += gv * u[k] + gt * du[k];
                    gu[k] += gv * w[k];
                    gdu[k] += gt * w[k];
                }
                break;
            }
            case Op::Sum: {
                const std::uint32_t* idx = sum_operands_.data() + b;
                for (std::uint32_t k = 0; k < a; ++k) {
                    adj_value_[idx[k]] += gv;
                    adj_tangent_[idx[k]] += gt;
                }
                break;
            }
            case Op::TangentOf:
                adj_tangent_[a] += gv;
                break;
        }
    }
}

void Tape::set_value(Var leaf, double v) {
    check_same_tape(leaf);
    if (!is_leaf(op_[leaf.index()])) throw Error("autodiff: set_value on a non-leaf node");
    value_[leaf.index()] = v;
}

void Tape::set_values(VarRange leaves, std::span<const double> values) {
    if (values.size() != leaves.count) throw ShapeError("autodiff: leaf range/value count mismatch");
    if (leaves.first + std::size_t{leaves.count} > op_.size()) throw Error("autodiff: leaf range out of bounds");
    for (std::uint32_t k = 0; k < leaves.count; ++k) {
        if (!is_leaf(op_[leaves.first + k])) throw Error("autodiff: set_values on a non-leaf node");
    }
    std::copy(values.begin(), values.end(), value_.begin() + leaves.first);
}

void Tape::gradient(VarRange leaves, std::span<double> out) const {
    if (out.size() != leaves.count) throw ShapeError("autodiff: gradient buffer size mismatch");
    for (std::uint32_t k = 0; k < leaves.count; ++k) {
        const double g = adj_value_[leaves.first + k];
        if (!std::isfinite(g)) {
            DivergenceError::Context ctx;
            ctx.op_index = leaves.first + k;
            throw DivergenceError("non-finite gradient entry", ctx);
        }
        out[k] = g;
    }
}

void Tape::clear() {
    op_.clear();
    active_.clear();
    lhs_.clear();
    rhs_.clear();
    aux_.clear();
    value_.clear();
    tangent_.clear();
    adj_value_.clear();
    adj_tangent_.clear();
    affine_.clear();
    sum_operands_.clear();
}

Var operator+(Var a, Var b) { return a.tape()->add(a, b); }
Var operator-(Var a, Var b) { return a.tape()->sub(a, b); }
Var operator*(Var a, Var b) { return a.tape()->mul(a, b); }
Var operator/(Var a, Var b) { return a.tape()->div(a, b); }
Var operator-(Var a) { return a.tape()->neg(a); }
Var operator+(Var a, double b) { return a + a.tape()->constant(b); }
Var operator+(double a, Var b) { return b.tape()->constant(a) + b; }
Var operator-(Var a, double b) { return a - a.tape()->constant(b); }
Var operator-(double a, Var b) { return b.tape()->constant(a) - b; }
Var operator*(Var a, double b) { return a * a.tape()->constant(b); }
Var operator*(double a, Var b) { return b.tape()->constant(a) * b; }
Var operator/(Var a, double b) { return a / a.tape()->constant(b); }
Var operator/(double a, Var b) { return b.tape()->constant(a) / b; }

Var tanh(Var a) { return a.tape()->tanh(a); }
Var sin(Var a) { return a.tape()->sin(a); }
Var cos(Var a) { return a.tape()->cos(a); }
Var exp(Var a) { return a.tape()->exp(a); }
Var square(Var a) { return a.tape()->square(a); }
Var pow(Var a, double exponent) { return a.tape()->pow(a, exponent); }
Var tangent_of(Var a) { return a.tape()->tangent_of(a); }

ValueAndTangent forward_with_tangent(Tape& tape, Var output, Var input, double x, VarRange params,
                                     std::span<const double> values) {
    tape.set_value(input, x);
    tape.set_values(params, values);
    tape.forward();
    return {tape.value(output), tape.tangent(output)};
}

double gradient(Tape& tape, Var loss, VarRange params, std::span<const double> values, std::span<double> out) {
    tape.set_values(params, values);
    tape.forward();
    tape.backward(loss);
    tape.gradient(params, out);
    return tape.value(loss);
}

}  // namespace pwnn::ad
