#include "pwnn/ode.hpp"

#include "pwnn/errors.hpp"
#include "pwnn/random.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace pwnn {

OdeProblem OdeProblem::from_text(std::string name, std::span<const std::string> rhs, std::vector<double> y0,
                                 double end, std::span<const std::string> analytic,
                                 std::span<const std::pair<std::string, double>> conserved) {
    OdeProblem p;
    p.name = std::move(name);
    p.dimension = rhs.size();
    for (const auto& text : rhs) p.rhs.push_back(Expression::parse(text, p.dimension));
    p.initial_value = std::move(y0);
    p.end = end;
    for (const auto& text : analytic) {
        Expression e = Expression::parse(text, p.dimension);
        if (e.uses_state()) throw DomainError("analytic solution '" + text + "' may only depend on x");
        p.analytic.push_back(std::move(e));
    }
    for (const auto& [text, expected] : conserved) {
        p.conserved.push_back({Expression::parse(text, p.dimension), expected});
    }
    p.validate();
    return p;
}

void OdeProblem::validate() const {
    if (dimension == 0) throw DomainError("problem '" + name + "' has no state components");
    if (rhs.size() != dimension) throw DomainError("problem '" + name + "': right-hand side count != dimension");
    if (initial_value.size() != dimension) {
        throw DomainError("problem '" + name + "': initial value length != dimension");
    }
    if (!(end > 0.0) || !std::isfinite(end)) throw DomainError("problem '" + name + "': interval end must be > 0");
    if (!analytic.empty()) {
        if (analytic.size() != dimension) {
            throw DomainError("problem '" + name + "': analytic solution needs one expression per component");
        }
        const std::vector<double> at0 = exact(0.0);
        for (std::size_t i = 0; i < dimension; ++i) {
            if (at0[i] != initial_value[i]) {
                throw DomainError("problem '" + name + "': analytic solution does not satisfy the initial value");
            }
        }
    }
}

std::vector<double> OdeProblem::exact(double x) const {
    if (analytic.empty()) throw DomainError("problem '" + name + "' has no analytic solution");
    std::vector<double> out;
    for (const auto& e : analytic) out.push_back(e.evaluate<double>(x, {}));
    return out;
}

std::vector<std::string> registry_names() { return {"example1", "example2_sir", "example3", "example4"}; }

OdeProblem registry_get(const std::string& name) {
    if (name == "example1") {
        const std::vector<std::string> rhs{"y2", "-y2 - (2 + sin(x)) * y1"};
        return OdeProblem::from_text(name, rhs, {0.0, 1.0}, 10.0);
    }
    if (name == "example2_sir") {
        const std::vector<std::string> rhs{"-0.003 * y1 * y2", "0.003 * y1 * y2 - 0.1 * y2", "0.1 * y2"};
        const std::vector<std::pair<std::string, double>> conserved{{"y1 + y2 + y3", 100.0}};
        return OdeProblem::from_text(name, rhs, {98.0, 2.0, 0.0}, 50.0, {}, conserved);
    }
    if (name == "example3") {
        const std::vector<std::string> rhs{"cos(x)", "-2 * sin(2 * x)"};
        const std::vector<std::string> analytic{"sin(x)", "cos(2 * x)"};
        return OdeProblem::from_text(name, rhs, {0.0, 1.0}, 50.0, analytic);
    }
    if (name == "example4") {
        const std::vector<std::string> rhs{"y2 * y3", "-y1 * y3", "-0.51 * y1 * y2"};
        const std::vector<std::pair<std::string, double>> conserved{{"y1^2 + y2^2", 1.0},
                                                                    {"0.51 * y1^2 + y3^2", 1.0}};
        return OdeProblem::from_text(name, rhs, {0.0, 1.0, 1.0}, 20.0, {}, conserved);
    }
    std::ostringstream os;
    os << "unknown problem '" << name << "'; valid names:";
    for (const auto& n : registry_names()) os << ' ' << n;
    throw RegistryError(os.str());
}

void ReferenceTrajectory::push(double x, std::span<const double> y, std::span<const double> dy) {
    xs_.push_back(x);
    states_.insert(states_.end(), y.begin(), y.end());
    slopes_.insert(slopes_.end(), dy.begin(), dy.end());
}

std::vector<double> ReferenceTrajectory::at(double x) const {
    if (xs_.empty()) throw DomainError("empty trajectory");
    const double lo = xs_.front();
    const double hi = xs_.back();
    const double tol = 1e-9 * std::max(1.0, std::abs(hi));
    if (x < lo - tol || x > hi + tol) throw DomainError("x outside the integrated range");
    if (xs_.size() == 1) return {states_.begin(), states_.end()};

    const double pos = (x - lo) / step_;
    auto i = static_cast<std::size_t>(std::clamp(std::floor(pos), 0.0, static_cast<double>(xs_.size() - 2)));
    const double t = (x - xs_[i]) / step_;
    auto y0 = state(i);
    auto y1 = state(i + 1);
    auto d0 = slope(i);
    auto d1 = slope(i + 1);
    if (t == 0.0) return {y0.begin(), y0.end()};
    if (t == 1.0) return {y1.begin(), y1.end()};
    const double t2 = t * t;
    const double t3 = t2 * t;
    const double h00 = 2 * t3 - 3 * t2 + 1;
    const double h10 = t3 - 2 * t2 + t;
    const double h01 = -2 * t3 + 3 * t2;
    const double h11 = t3 - t2;
    std::vector<double> out(dimension_);
    for (std::size_t k = 0; k < dimension_; ++k) {
        out[k] = h00 * y0[k] + h10 * step_ * d0[k] + h01 * y1[k] + h11 * step_ * d1[k];
    }
    return out;
}

ReferenceTrajectory rk4_solve(const OdeProblem& problem, double step, double x_end) {
    problem.validate();
    if (!(step > 0.0)) throw DomainError("rk4 step must be positive");
    if (x_end > problem.end * (1 + 1e-12)) throw DomainError("rk4 x_end beyond the problem interval");
    if (x_end < 0.0) throw DomainError("rk4 x_end must be non-negative");
    const double ratio = x_end / step;
    const auto steps = static_cast<std::size_t>(std::llround(ratio));
    if (std::abs(ratio - static_cast<double>(steps)) > 1e-9 * std::max(1.0, ratio)) {
        throw DomainError("rk4 x_end must be a whole number of steps");
    }

    const std::size_t n = problem.dimension;
    ReferenceTrajectory traj(step, n);
    std::vector<double> y = problem.initial_value;
    std::vector<double> tmp(n);
    std::vector<double> k1 = problem.f(0.0, y);
    traj.push(0.0, y, k1);
    for (std::size_t s = 0; s < steps; ++s) {
        const double x = static_cast<double>(s) * step;
        for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * step * k1[i];
        const std::vector<double> k2 = problem.f(x + 0.5 * step, tmp);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * step * k2[i];
        const std::vector<double> k3 = problem.f(x + 0.5 * step, tmp);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + step * k3[i];
        const std::vector<double> k4 = problem.f(x + step, tmp);
        for (std::size_t i = 0; i < n; ++i) y[i] += step / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        const double x_next = static_cast<double>(s + 1) * step;
        k1 = problem.f(x_next, y);
        for (std::size_t i = 0; i < n; ++i) {
            if (!std::isfinite(y[i]) || !std::isfinite(k1[i])) {
                DivergenceError::Context ctx;
                ctx.step = s + 1;
                throw DivergenceError("non-finite RK4 state at x = " + std::to_string(x_next), ctx);
            }
        }
        traj.push(x_next, y, k1);
    }
    return traj;
}

std::string to_string(SamplingMode mode) { return mode == SamplingMode::Equidistant ? "equidistant" : "random"; }

SamplingMode sampling_from_string(const std::string& name) {
    if (name == "equidistant" || name == "uniform") return SamplingMode::Equidistant;
    if (name == "random") return SamplingMode::Random;
    throw DomainError("unknown sampling mode '" + name + "' (expected equidistant or random)");
}

std::vector<double> sample_collocation(double a, double b, std::size_t count, SamplingMode mode,
                                       std::uint64_t seed) {
    if (!(a < b) || !std::isfinite(a) || !std::isfinite(b)) throw DomainError("collocation interval must have a < b");
    if (count < 2) throw DomainError("need at least two collocation points");
    std::vector<double> xs(count);
    if (mode == SamplingMode::Equidistant) {
        const double width = b - a;
        const double denom = static_cast<double>(count - 1);
        for (std::size_t j = 0; j < count; ++j) xs[j] = a + static_cast<double>(j) * width / denom;
        xs.back() = b;
        return xs;
    }
    Rng rng(seed);
    for (;;) {
        for (double& x : xs) x = uniform(rng, a, b);
        std::sort(xs.begin(), xs.end());
        if (std::adjacent_find(xs.begin(), xs.end()) == xs.end()) return xs;
    }
}

}  // namespace pwnn
