#include "pwnn/trainer.hpp"

#include "pwnn/errors.hpp"
#include "pwnn/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pwnn {

double TrainingConfig::learning_rate(std::size_t round) const {
    if (learning_rates.empty()) throw DomainError("learning rate schedule is empty");
    if (learning_rates.size() == 1) return learning_rates.front();
    if (round == 0 || round > learning_rates.size()) throw DomainError("no learning rate for this round");
    return learning_rates[round - 1];
}

void TrainingConfig::validate() const {
    if (learning_rates.empty()) throw DomainError("learning rate schedule is empty");
    for (double lr : learning_rates) {
        if (!(lr > 0.0) || !std::isfinite(lr)) throw DomainError("learning rates must be positive");
    }
    if (max_iterations < 1) throw DomainError("max_iterations must be at least 1");
    if (!(epsilon >= 0.0)) throw DomainError("epsilon must be non-negative");
    if (rounds < 1) throw DomainError("rounds must be at least 1");
    if (learning_rates.size() != 1 && learning_rates.size() < rounds) {
        throw DomainError("learning rate schedule shorter than the number of rounds");
    }
    if (points < 2) throw DomainError("need at least two collocation points per segment");
}

void adam_step(std::span<double> params, std::span<const double> grad, AdamState& state, double lr) {
    if (params.size() != grad.size() || state.m.size() != params.size() || state.v.size() != params.size()) {
        throw ShapeError("adam: parameter, gradient and state sizes differ");
    }
    state.t += 1;
    const double t = static_cast<double>(state.t);
    const double c1 = 1.0 - std::pow(state.beta1, t);
    const double c2 = 1.0 - std::pow(state.beta2, t);
    for (std::size_t k = 0; k < params.size(); ++k) {
        const double g = grad[k];
        state.m[k] = state.beta1 * state.m[k] + (1.0 - state.beta1) * g;
        state.v[k] = state.beta2 * state.v[k] + (1.0 - state.beta2) * g * g;
        const double m_hat = state.m[k] / c1;
        const double v_hat = state.v[k] / c2;
        params[k] -= lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
}

SegmentLoss::SegmentLoss(const LayerSpec& spec, const OdeProblem& problem, std::span<const double> collocation,
                         double ic_point, std::span<const double> ic_target, double left, double right)
    : tape_(std::make_unique<ad::Tape>()) {
    spec.validate();
    const std::size_t n = problem.dimension;
    if (spec.outputs() != n) throw ShapeError("network outputs do not match problem dimension");
    if (ic_target.size() != n) throw ShapeError("initial-value target length does not match problem dimension");
    if (collocation.empty()) throw DomainError("no collocation points");
    for (double xj : collocation) {
        if (xj < left || xj > right) throw DomainError("collocation point outside the segment");
    }

    ad::Tape& tape = *tape_;
    const std::vector<double> zeros(spec.parameter_count(), 0.0);
    params_ = tape.parameters(zeros);

    std::vector<ad::Var> terms;
    terms.reserve(collocation.size() * n);
    for (double xj : collocation) {
        const ad::Var x = tape.input(xj);
        const std::vector<ad::Var> out = record_network(tape, spec, params_, x, left, right);
        const std::vector<ad::Var> f = problem.evaluate_rhs<ad::Var>(x, out);
        for (std::size_t i = 0; i < n; ++i) terms.push_back(tape.square(tape.sub(tape.tangent_of(out[i]), f[i])));
    }
    const double residual_scale = 1.0 / (static_cast<double>(collocation.size()) * static_cast<double>(n));
    residual_ = tape.mul(tape.sum(terms), tape.constant(residual_scale));

    terms.clear();
    const ad::Var x0 = tape.input(ic_point);
    const std::vector<ad::Var> out0 = record_network(tape, spec, params_, x0, left, right);
    for (std::size_t i = 0; i < n; ++i) terms.push_back(tape.square(tape.sub(out0[i], tape.constant(ic_target[i]))));
    ic_ = tape.mul(tape.sum(terms), tape.constant(1.0 / static_cast<double>(n)));

    total_ = tape.add(residual_, ic_);
}

LossBreakdown SegmentLoss::read() const {
    return {tape_->value(residual_), tape_->value(ic_), tape_->value(total_)};
}

LossBreakdown SegmentLoss::evaluate(std::span<const double> params) {
    tape_->set_values(params_, params);
    tape_->forward();
    return read();
}

LossBreakdown SegmentLoss::evaluate_with_gradient(std::span<const double> params, std::span<double> gradient) {
    ad::gradient(*tape_, total_, params_, params, gradient);
    return read();
}

void SegmentLoss::gradient_at_last_evaluation(std::span<double> gradient) {
    tape_->backward(total_);
    tape_->gradient(params_, gradient);
}

LossBreakdown segment_loss(const SegmentNetwork& net, const OdeProblem& problem, std::span<const double> collocation,
                           std::span<const double> ic_target) {
    SegmentLoss loss(net.spec(), problem, collocation, net.left, ic_target, net.left, net.right);
    return loss.evaluate(net.params.flat());
}

GradientCheck check_gradient(SegmentLoss& loss, std::span<const double> params, std::size_t count,
                             std::uint64_t seed, double rel_tol) {
    const std::size_t p = loss.parameter_count();
    std::vector<double> grad(p);
    const double base = loss.evaluate_with_gradient(params, grad).total;

    std::vector<std::size_t> order(p);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    count = std::min(count, p);
    for (std::size_t k = 0; k < count; ++k) {
        const auto pick = k + static_cast<std::size_t>(uniform01(rng) * static_cast<double>(p - k));
        std::swap(order[k], order[std::min(pick, p - 1)]);
    }

    GradientCheck result;
    std::vector<double> probe(params.begin(), params.end());
    const double abs_floor = 1e-7 * std::max(1.0, std::abs(base));
    for (std::size_t k = 0; k < count; ++k) {
        const std::size_t idx = order[k];
        const double h = 1e-6 * std::max(1.0, std::abs(params[idx]));
        probe[idx] = params[idx] + h;
        const double up = loss.evaluate(probe).total;
        probe[idx] = params[idx] - h;
        const double down = loss.evaluate(probe).total;
        probe[idx] = params[idx];
        const double fd = (up - down) / (2.0 * h);
        const double allowed = rel_tol * std::max(std::abs(fd), std::abs(grad[idx])) + abs_floor;
        result.max_violation = std::max(result.max_violation, std::abs(fd - grad[idx]) / allowed);
        ++result.checked;
    }
    return result;
}

SegmentTrainingResult train_segment(SegmentNetwork net, const OdeProblem& problem,
                                    std::span<const double> collocation, std::span<const double> ic_target,
                                    const TrainingConfig& config, std::size_t round_index) {
    config.validate();
    net.initial_value.assign(ic_target.begin(), ic_target.end());
    net.validate();
    const double lr = config.learning_rate(round_index);
    SegmentLoss loss(net.spec(), problem, collocation, net.left, ic_target, net.left, net.right);

    const std::size_t p = loss.parameter_count();
    std::vector<double> theta = net.params.export_flat();
    std::vector<double> grad(p);
    AdamState adam(p);

    SegmentTrainingResult result;
    result.trace.reserve(config.max_iterations + 1);

    std::size_t it = 0;
    try {
        if (config.gradient_check) {
            const GradientCheck check = check_gradient(loss, theta, 10, derive_seed(config.seed, round_index));
            if (!check.passed()) {
                throw GradientCheckError("tape gradient disagrees with finite differences (violation ratio " +
                                         std::to_string(check.max_violation) + ")");
            }
        }

        // One forward per iterate; the reverse sweep reuses it only when another step follows.
        LossBreakdown current = loss.evaluate(theta);
        result.trace.push_back({0, current});
        LossBreakdown best = current;
        std::vector<double> best_theta = theta;

        while (it < config.max_iterations && current.total >= config.epsilon) {
            loss.gradient_at_last_evaluation(grad);
            adam_step(theta, grad, adam, lr);
            ++it;
            current = loss.evaluate(theta);
            result.trace.push_back({it, current});
            if (config.keep_best && current.total < best.total) {
                best = current;
                best_theta = theta;
            }
        }

        if (config.keep_best && best.total < current.total) {
            theta = std::move(best_theta);
            current = best;
        }
        result.final_loss = current;
    } catch (const DivergenceError& e) {
        DivergenceError::Context ctx;
        ctx.iteration = it;
        ctx.round = round_index;
        throw e.with_context(ctx);
    }

    net.params.import_flat(theta);
    result.net = std::move(net);
    result.iterations = it;
    return result;
}

}  // namespace pwnn
