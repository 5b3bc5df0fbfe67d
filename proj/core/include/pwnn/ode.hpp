#pragma once

#include "pwnn/expression.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace pwnn {

/// Scalar function of the state whose value stays at `expected` along exact
/// solutions.
struct ConservedQuantity {
    Expression expression;
    double expected = 0.0;
};

/// dy/dx = f(x, y) on (0, end) with y(0) = initial_value.
struct OdeProblem {
    std::string name;
    std::size_t dimension = 0;
    std::vector<Expression> rhs;  // one component expression per state entry
    std::vector<double> initial_value;
    double end = 1.0;
    std::vector<Expression> analytic;  // empty, or one expression in x per component
    std::vector<ConservedQuantity> conserved;

    /// Builds a problem from expression text; throws ParseError / DomainError.
    static OdeProblem from_text(std::string name, std::span<const std::string> rhs, std::vector<double> y0,
                                double end, std::span<const std::string> analytic = {},
                                std::span<const std::pair<std::string, double>> conserved = {});

    void validate() const;
    bool has_analytic() const { return !analytic.empty(); }

    template <class T>
    std::vector<T> evaluate_rhs(const T& x, std::span<const T> y) const {
        std::vector<T> out;
        out.reserve(rhs.size());
        for (const auto& f : rhs) out.push_back(f.evaluate<T>(x, y));
        return out;
    }

    std::vector<double> f(double x, std::span<const double> y) const { return evaluate_rhs<double>(x, y); }
    std::vector<double> exact(double x) const;
};

/// Names accepted by registry_get.
std::vector<std::string> registry_names();
/// Throws RegistryError listing the valid names.
OdeProblem registry_get(const std::string& name);

/// Fixed-step classical RK4 states at x_i = i * step.
class ReferenceTrajectory {
public:
    ReferenceTrajectory(double step, std::size_t dimension) : step_(step), dimension_(dimension) {}

    double step() const { return step_; }
    std::size_t dimension() const { return dimension_; }
    std::size_t size() const { return xs_.size(); }
    double x(std::size_t i) const { return xs_[i]; }
    std::span<const double> state(std::size_t i) const { return {states_.data() + i * dimension_, dimension_}; }
    std::span<const double> slope(std::size_t i) const { return {slopes_.data() + i * dimension_, dimension_}; }

    /// Cubic Hermite interpolation between stored nodes (exact at nodes).
    std::vector<double> at(double x) const;

    void push(double x, std::span<const double> y, std::span<const double> dy);

private:
    double step_;
    std::size_t dimension_;
    std::vector<double> xs_;
    std::vector<double> states_;
    std::vector<double> slopes_;
};

/// Integrates from 0 to x_end; x_end must be a whole number of steps and at
/// most problem.end. Throws DivergenceError (with the step) on a non-finite state.
ReferenceTrajectory rk4_solve(const OdeProblem& problem, double step, double x_end);

enum class SamplingMode { Equidistant, Random };

std::string to_string(SamplingMode mode);
SamplingMode sampling_from_string(const std::string& name);

/// Collocation points in [a, b], strictly increasing.
std::vector<double> sample_collocation(double a, double b, std::size_t count, SamplingMode mode,
                                       std::uint64_t seed);

}  // namespace pwnn
