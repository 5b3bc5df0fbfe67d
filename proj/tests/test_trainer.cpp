#include "oracles.hpp"

#include "pwnn/errors.hpp"
#include "pwnn/random.hpp"
#include "pwnn/trainer.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

using namespace pwnn;

namespace {

// Straight-line loss: network values from the dense oracle, derivatives by
// central differences in x, rhs written by hand.
double oracle_loss(const LayerSpec& spec, std::span<const double> flat, std::span<const double> xs, double a,
                   std::span<const double> target) {
    const std::size_t n = spec.outputs();
    double residual = 0.0;
    for (double x : xs) {
        const auto y = oracle::network(spec.sizes, flat, x);
        const auto dy = oracle::derivative([&](double t) { return oracle::network(spec.sizes, flat, t); }, x, 1e-5);
        const auto f = oracle::example1_rhs(x, y);
        for (std::size_t i = 0; i < n; ++i) residual += (dy[i] - f[i]) * (dy[i] - f[i]);
    }
    residual /= static_cast<double>(xs.size() * n);
    const auto y0 = oracle::network(spec.sizes, flat, a);
    double ic = 0.0;
    for (std::size_t i = 0; i < n; ++i) ic += (y0[i] - target[i]) * (y0[i] - target[i]);
    return residual + ic / static_cast<double>(n);
}

}  // namespace

TEST(Adam, ZeroGradientLeavesParameters) {
    std::vector<double> theta{1.0, -2.0};
    AdamState s(2);
    adam_step(theta, std::vector<double>{0.0, 0.0}, s, 0.1);
    EXPECT_EQ(theta, (std::vector<double>{1.0, -2.0}));
    EXPECT_EQ(s.t, 1u);
}

TEST(Adam, FirstStepByHand) {
    std::vector<double> theta{0.0};
    AdamState s(1);
    adam_step(theta, std::vector<double>{1.0}, s, 0.01);
    EXPECT_NEAR(s.m[0], 0.1, 3e-17);
    EXPECT_NEAR(s.v[0], 0.001, 1e-18);
    EXPECT_NEAR(theta[0], -0.01 / (1.0 + 1e-8), 1e-17);
}

TEST(Adam, DeterministicAndShapeChecked) {
    std::vector<double> a{0.3, 0.4}, b{0.3, 0.4};
    AdamState sa(2), sb(2);
    for (int k = 0; k < 3; ++k) {
        adam_step(a, std::vector<double>{0.5, -0.1}, sa, 0.01);
        adam_step(b, std::vector<double>{0.5, -0.1}, sb, 0.01);
    }
    EXPECT_EQ(a, b);
    EXPECT_THROW(adam_step(a, std::vector<double>{1.0}, sa, 0.01), ShapeError);
}

TEST(TrainingConfig, ScheduleAndValidation) {
    TrainingConfig c;
    c.learning_rates = {0.01};
    c.rounds = 4;
    EXPECT_EQ(c.learning_rate(3), 0.01);
    c.learning_rates = {0.01, 0.001, 0.0005, 0.0001, 0.5};
    EXPECT_NO_THROW(c.validate());
    EXPECT_EQ(c.learning_rate(2), 0.001);
    c.learning_rates = {0.01, 0.001};
    EXPECT_THROW(c.validate(), DomainError);
    c = TrainingConfig{};
    c.learning_rates = {-1.0};
    EXPECT_THROW(c.validate(), DomainError);
    c = TrainingConfig{};
    c.max_iterations = 0;
    EXPECT_THROW(c.validate(), DomainError);
    c = TrainingConfig{};
    c.rounds = 0;
    EXPECT_THROW(c.validate(), DomainError);
    c = TrainingConfig{};
    c.epsilon = -1.0;
    EXPECT_THROW(c.validate(), DomainError);
}

TEST(SegmentLoss, ZeroProblemZeroNetwork) {
    const OdeProblem p = OdeProblem::from_text("zero", std::vector<std::string>{"0", "0"}, {0.0, 0.0}, 1.0);
    const SegmentNetwork net(NetworkParameters(LayerSpec::make(std::vector<std::size_t>{5}, 2)), 0.0, 1.0, {0, 0});
    const auto xs = sample_collocation(0.0, 1.0, 10, SamplingMode::Equidistant, 1);
    const LossBreakdown l = segment_loss(net, p, xs, std::vector<double>{0.0, 0.0});
    EXPECT_EQ(l.total, 0.0);
}

TEST(SegmentLoss, TanhSolvesRiccati) {
    const OdeProblem p = OdeProblem::from_text("riccati", std::vector<std::string>{"1 - y1^2"}, {0.0}, 2.0);
    const SegmentNetwork net(NetworkParameters(LayerSpec{{1, 1, 1}}, {1.0, 0.0, 1.0, 0.0}), 0.0, 2.0, {0.0});
    const auto xs = sample_collocation(0.0, 2.0, 50, SamplingMode::Random, 3);
    const LossBreakdown l = segment_loss(net, p, xs, std::vector<double>{0.0});
    EXPECT_LE(l.total, 1e-14);
    EXPECT_EQ(l.ic, 0.0);
}

TEST(SegmentLoss, MatchesStraightLineOracle) {
    const OdeProblem p = registry_get("example1");
    const LayerSpec spec = LayerSpec::make(std::vector<std::size_t>{20, 20}, 2);
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        NetworkParameters params = xavier_init(spec, seed);
        Rng rng(seed);
        for (double& v : params.flat()) v += uniform(rng, -0.1, 0.1);
        const SegmentNetwork net(params, 0.0, 2.0, {0.0, 1.0});
        const auto xs = sample_collocation(0.0, 2.0, 10, SamplingMode::Random, seed);
        const std::vector<double> target{0.2, 0.9};
        const LossBreakdown l = segment_loss(net, p, xs, target);
        EXPECT_NEAR(l.total, oracle_loss(spec, params.flat(), xs, 0.0, target), 1e-6);
        EXPECT_EQ(l.total, l.residual + l.ic);
        EXPECT_GE(l.residual, 0.0);
        EXPECT_GE(l.ic, 0.0);
    }
}

TEST(SegmentLoss, Preconditions) {
    const OdeProblem p = registry_get("example1");
    const LayerSpec spec = LayerSpec::make(std::vector<std::size_t>{4}, 2);
    EXPECT_THROW(SegmentLoss(spec, p, std::vector<double>{0.5, 3.0}, 0.0, std::vector<double>{0, 1}, 0.0, 2.0),
                 DomainError);
    EXPECT_THROW(SegmentLoss(spec, p, std::vector<double>{0.5}, 0.0, std::vector<double>{0}, 0.0, 2.0), ShapeError);
    const LayerSpec wrong = LayerSpec::make(std::vector<std::size_t>{4}, 3);
    EXPECT_THROW(SegmentLoss(wrong, p, std::vector<double>{0.5}, 0.0, std::vector<double>{0, 1}, 0.0, 2.0),
                 ShapeError);
}

TEST(GradientCheck, PassesOnExample1) {
    const OdeProblem p = registry_get("example1");
    const LayerSpec spec = LayerSpec::make(std::vector<std::size_t>{20, 20}, 2);
    const auto xs = sample_collocation(2.0, 4.0, 30, SamplingMode::Equidistant, 1);
    SegmentLoss loss(spec, p, xs, 2.0, std::vector<double>{0.1, -0.3}, 2.0, 4.0);
    const auto theta = xavier_init(spec, 9).export_flat();
    const GradientCheck check = check_gradient(loss, theta, 10, 5);
    EXPECT_EQ(check.checked, 10u);
    EXPECT_TRUE(check.passed()) << check.max_violation;
}

namespace {

struct Example1Segment {
    OdeProblem problem = registry_get("example1");
    LayerSpec spec = LayerSpec::make(std::vector<std::size_t>{20, 20}, 2);
    std::vector<double> xs = sample_collocation(0.0, 2.0, 50, SamplingMode::Equidistant, 1);
    std::vector<double> ic{0.0, 1.0};
    SegmentNetwork net{xavier_init(spec, 1), 0.0, 2.0, {0.0, 1.0}};
};

}  // namespace

TEST(TrainSegment, InfiniteEpsilonReturnsImmediately) {
    Example1Segment s;
    TrainingConfig c;
    c.epsilon = std::numeric_limits<double>::infinity();
    const auto r = train_segment(s.net, s.problem, s.xs, s.ic, c, 1);
    EXPECT_EQ(r.iterations, 0u);
    ASSERT_EQ(r.trace.size(), 1u);
    EXPECT_EQ(r.net.params, s.net.params);
    EXPECT_EQ(r.final_loss.total, r.trace[0].loss.total);
}

TEST(TrainSegment, SingleIterationIsOneAdamStep) {
    Example1Segment s;
    TrainingConfig c;
    c.max_iterations = 1;
    c.learning_rates = {0.01};
    const auto r = train_segment(s.net, s.problem, s.xs, s.ic, c, 1);
    EXPECT_EQ(r.iterations, 1u);
    EXPECT_EQ(r.trace.size(), 2u);

    SegmentLoss loss(s.spec, s.problem, s.xs, 0.0, s.ic, 0.0, 2.0);
    std::vector<double> theta = s.net.params.export_flat(), grad(theta.size());
    loss.evaluate_with_gradient(theta, grad);
    AdamState adam(theta.size());
    adam_step(theta, grad, adam, 0.01);
    EXPECT_EQ(r.net.params.export_flat(), theta);
    EXPECT_EQ(r.final_loss.total, loss.evaluate(theta).total);
}

TEST(TrainSegment, ReducesLossAndIsDeterministic) {
    Example1Segment s;
    TrainingConfig c;
    c.max_iterations = 300;
    const auto a = train_segment(s.net, s.problem, s.xs, s.ic, c, 1);
    const auto b = train_segment(s.net, s.problem, s.xs, s.ic, c, 1);
    EXPECT_LT(a.final_loss.total, 0.1 * a.trace.front().loss.total);
    ASSERT_EQ(a.trace.size(), b.trace.size());
    for (std::size_t i = 0; i < a.trace.size(); ++i) {
        EXPECT_EQ(a.trace[i].iteration, i);
        EXPECT_EQ(a.trace[i].loss.total, b.trace[i].loss.total);
    }
    EXPECT_EQ(a.net.params, b.net.params);
    EXPECT_EQ(a.net.initial_value, s.ic);
}

TEST(TrainSegment, StopsAtEpsilon) {
    Example1Segment s;
    TrainingConfig c;
    c.max_iterations = 2000;
    c.epsilon = 0.05;
    const auto r = train_segment(s.net, s.problem, s.xs, s.ic, c, 1);
    EXPECT_LT(r.iterations, 2000u);
    EXPECT_LT(r.final_loss.total, 0.05);
    EXPECT_GE(r.trace[r.trace.size() - 2].loss.total, 0.05);
}

TEST(TrainSegment, KeepBestReturnsMinimum) {
    Example1Segment s;
    TrainingConfig c;
    c.max_iterations = 200;
    c.learning_rates = {0.05};
    c.keep_best = true;
    const auto r = train_segment(s.net, s.problem, s.xs, s.ic, c, 1);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& rec : r.trace) best = std::min(best, rec.loss.total);
    EXPECT_EQ(r.final_loss.total, best);
}

TEST(TrainSegment, DivergenceCarriesIterationAndRound) {
    const OdeProblem p = OdeProblem::from_text("stiff", std::vector<std::string>{"exp(y1 * 100)"}, {0.0}, 1.0);
    const LayerSpec spec = LayerSpec::make(std::vector<std::size_t>{3}, 1);
    NetworkParameters params(spec);
    params.bias(2, 0) = 10.0;
    const SegmentNetwork net(params, 0.0, 1.0, {0.0});
    const auto xs = sample_collocation(0.0, 1.0, 5, SamplingMode::Equidistant, 1);
    TrainingConfig c;
    c.gradient_check = false;
    try {
        train_segment(net, p, xs, std::vector<double>{0.0}, c, 3);
        FAIL();
    } catch (const DivergenceError& e) {
        ASSERT_TRUE(e.context().round.has_value());
        EXPECT_EQ(*e.context().round, 3u);
        ASSERT_TRUE(e.context().iteration.has_value());
        EXPECT_EQ(*e.context().iteration, 0u);
    }
}

// The example1 first segment with the published setup trains below 1e-2.
TEST(TrainSegment, Example1FirstSegment) {
    Example1Segment s;
    s.xs = sample_collocation(0.0, 2.0, 200, SamplingMode::Equidistant, 1);
    TrainingConfig c;
    c.max_iterations = 2000;
    c.learning_rates = {0.01};
    const auto r = train_segment(s.net, s.problem, s.xs, s.ic, c, 1);
    EXPECT_LT(r.final_loss.total, 1e-2);
}
