#pragma once

#include "pwnn/autodiff.hpp"
#include "pwnn/network.hpp"
#include "pwnn/ode.hpp"

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace pwnn {

struct TrainingConfig {
    /// Per-round learning rates; a single entry applies to every round.
    std::vector<double> learning_rates{0.01};
    std::size_t max_iterations = 2000;
    /// Training of a segment stops once the total loss drops below this.
    double epsilon = 1e-8;
    std::size_t points = 200;  // collocation points per segment
    std::uint64_t seed = 1;
    std::size_t rounds = 1;
    SamplingMode sampling = SamplingMode::Equidistant;
    /// Return the best iterate instead of the last one.
    bool keep_best = false;
    /// Finite-difference spot check of the tape gradient before training.
    bool gradient_check = true;

    /// `round` is 1-based.
    double learning_rate(std::size_t round) const;
    void validate() const;
};

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    std::uint64_t t = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    AdamState() = default;
    explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
};

void adam_step(std::span<double> params, std::span<const double> grad, AdamState& state, double lr);

struct LossBreakdown {
    double residual = 0.0;  // mean squared equation residual
    double ic = 0.0;        // mean squared initial-value mismatch
    double total = 0.0;
};

/// Residual + initial-condition loss of one segment, recorded once on a tape
/// and replayed for every parameter vector.
///
///   residual = 1/(M n) sum_j sum_i (dN_i/dx(x_j) - f_i(x_j, N(x_j)))^2
///   ic       = 1/n sum_i (N_i(ic_point) - ic_target_i)^2
///
/// Collocation points are summed in ascending index order.
class SegmentLoss {
public:
    SegmentLoss(const LayerSpec& spec, const OdeProblem& problem, std::span<const double> collocation,
                double ic_point, std::span<const double> ic_target, double left, double right);

    LossBreakdown evaluate(std::span<const double> params);
    LossBreakdown evaluate_with_gradient(std::span<const double> params, std::span<double> gradient);
    /// Reverse sweep over the values left by the previous evaluate().
    void gradient_at_last_evaluation(std::span<double> gradient);

    std::size_t parameter_count() const { return params_.count; }
    ad::Tape& tape() { return *tape_; }
    ad::Var total_var() const { return total_; }
    ad::VarRange parameter_range() const { return params_; }

private:
    LossBreakdown read() const;

    std::unique_ptr<ad::Tape> tape_;
    ad::VarRange params_;
    ad::Var residual_;
    ad::Var ic_;
    ad::Var total_;
};

/// Loss of `net` with its own left end as the initial-value point.
LossBreakdown segment_loss(const SegmentNetwork& net, const OdeProblem& problem, std::span<const double> collocation,
                           std::span<const double> ic_target);

struct GradientCheck {
    double max_violation = 0.0;  // worst |fd - g| / allowed, passes when <= 1
    std::size_t checked = 0;
    bool passed() const { return max_violation <= 1.0; }
};

/// Central differences on `count` randomly chosen parameters.
GradientCheck check_gradient(SegmentLoss& loss, std::span<const double> params, std::size_t count,
                             std::uint64_t seed, double rel_tol = 1e-4);

struct LossRecord {
    std::size_t iteration = 0;
    LossBreakdown loss;
};

struct SegmentTrainingResult {
    SegmentNetwork net;
    std::vector<LossRecord> trace;  // iteration 0 is the initial loss
    LossBreakdown final_loss;
    std::size_t iterations = 0;
};

/// Full-batch Adam until `max_iterations` steps were taken or the loss drops
/// below epsilon. The initial-value target is held constant. Adam state starts
/// fresh on every call.
SegmentTrainingResult train_segment(SegmentNetwork net, const OdeProblem& problem,
                                    std::span<const double> collocation, std::span<const double> ic_target,
                                    const TrainingConfig& config, std::size_t round_index);

}  // namespace pwnn
