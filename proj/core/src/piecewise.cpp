#include "pwnn/piecewise.hpp"

#include "pwnn/random.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace pwnn {

void Partition::validate() const {
    if (breakpoints.size() < 2) throw DomainError("partition needs at least one segment");
    if (breakpoints.front() != 0.0) throw DomainError("partition must start at 0");
    for (std::size_t i = 1; i < breakpoints.size(); ++i) {
        if (!(breakpoints[i] > breakpoints[i - 1]) || !std::isfinite(breakpoints[i])) {
            throw DomainError("partition breakpoints must be strictly increasing");
        }
    }
}

Partition make_partition(double end, std::size_t segments) {
    if (!(end > 0.0) || !std::isfinite(end)) throw DomainError("partition end must be positive");
    if (segments < 1) throw DomainError("partition needs at least one segment");
    Partition p;
    p.breakpoints.resize(segments + 1);
    for (std::size_t k = 0; k <= segments; ++k) {
        p.breakpoints[k] = static_cast<double>(k) * end / static_cast<double>(segments);
    }
    p.breakpoints.back() = end;
    return p;
}

Partition make_partition(std::vector<double> breakpoints) {
    Partition p{std::move(breakpoints)};
    p.validate();
    return p;
}

PiecewiseSolution::PiecewiseSolution(Partition partition, std::vector<SegmentNetwork> segments)
    : partition_(std::move(partition)), segments_(std::move(segments)) {
    partition_.validate();
    if (segments_.size() != partition_.segments()) throw ShapeError("one network per segment required");
    for (std::size_t k = 0; k < segments_.size(); ++k) {
        const auto& net = segments_[k];
        net.validate();
        if (net.left != partition_.left(k) || net.right != partition_.right(k)) {
            throw DomainError("segment " + std::to_string(k + 1) + " interval does not match the partition");
        }
        if (!net.spec().same_shape(segments_.front().spec())) {
            throw ShapeError("all segment networks must share one layer structure");
        }
    }
}

std::size_t PiecewiseSolution::segment_index(double x) const {
    const auto& a = partition_.breakpoints;
    if (!(x >= a.front() && x <= a.back())) throw DomainError("x = " + std::to_string(x) + " outside [0, T]");
    const auto it = std::lower_bound(a.begin() + 1, a.end(), x);
    return static_cast<std::size_t>(it - a.begin()) - 1;
}

std::vector<double> PiecewiseSolution::evaluate(double x) const { return pwnn::evaluate(segments_[segment_index(x)], x); }

std::vector<double> evaluate_piecewise(const PiecewiseSolution& solution, double x) { return solution.evaluate(x); }

JumpReport jump_report(const PiecewiseSolution& solution) {
    JumpReport report;
    const auto& segs = solution.segments();
    for (std::size_t k = 0; k + 1 < segs.size(); ++k) {
        JumpEntry e;
        e.breakpoint = k + 1;
        e.x = solution.partition().right(k);
        e.left = evaluate(segs[k], e.x);
        e.right = evaluate(segs[k + 1], e.x);
        double sq = 0.0;
        for (std::size_t i = 0; i < e.left.size(); ++i) {
            const double d = std::abs(e.right[i] - e.left[i]);
            e.jump = std::max(e.jump, d);
            sq += d * d;
        }
        e.euclidean = std::sqrt(sq);
        report.push_back(std::move(e));
    }
    return report;
}

std::string to_string(InitSource source) {
    switch (source) {
        case InitSource::Xavier: return "xavier";
        case InitSource::Transfer: return "transfer";
        case InitSource::PreviousRound: return "previous_round";
    }
    return "?";
}

const SegmentRecord& RunReport::record(std::size_t round, std::size_t segment) const {
    for (const auto& r : records) {
        if (r.round == round && r.segment == segment) return r;
    }
    throw DomainError("no record for round " + std::to_string(round) + ", segment " + std::to_string(segment));
}

std::size_t RunReport::rounds_completed() const {
    const std::size_t p = partition.segments();
    return p == 0 ? 0 : records.size() / p;
}

std::vector<std::vector<double>> RunReport::round_losses() const {
    const std::size_t p = partition.segments();
    std::vector<std::vector<double>> table(rounds_completed(), std::vector<double>(p));
    for (const auto& r : records) {
        if (r.round <= table.size()) table[r.round - 1][r.segment - 1] = r.final_loss.total;
    }
    return table;
}

std::vector<double> RunReport::round_means() const {
    std::vector<double> means;
    for (const auto& row : round_losses()) {
        double sum = 0.0;
        for (double v : row) sum += v;
        means.push_back(sum / static_cast<double>(row.size()));
    }
    return means;
}

RunAborted::RunAborted(const DivergenceError& cause, RunReport partial)
    : DivergenceError(cause), report_(std::make_shared<const RunReport>(std::move(partial))) {}

std::vector<double> segment_collocation(const Partition& partition, std::size_t k, const TrainingConfig& config) {
    return sample_collocation(partition.left(k), partition.right(k), config.points, config.sampling,
                              derive_seed(config.seed, 1000 + k));
}

PwnnResult run_pwnn(const OdeProblem& problem, const Partition& partition, const LayerSpec& spec,
                    const TrainingConfig& config, const PwnnOptions& options) {
    using clock = std::chrono::steady_clock;
    problem.validate();
    partition.validate();
    spec.validate();
    config.validate();
    if (spec.outputs() != problem.dimension) throw ShapeError("network outputs do not match problem dimension");
    if (std::abs(partition.end() - problem.end) > 1e-12 * problem.end) {
        throw DomainError("partition does not cover the problem interval");
    }

    const auto start = clock::now();
    const std::size_t p = partition.segments();

    RunReport report;
    report.problem = problem.name;
    report.spec = spec;
    report.config = config;
    report.options = options;
    report.partition = partition;

    std::vector<std::vector<double>> collocation(p);
    for (std::size_t k = 0; k < p; ++k) collocation[k] = segment_collocation(partition, k, config);

    std::vector<SegmentNetwork> current(p);
    std::vector<std::vector<double>> round1_targets(p);

    for (std::size_t round = 1; round <= config.rounds; ++round) {
        for (std::size_t k = 0; k < p; ++k) {
            SegmentRecord rec;
            rec.round = round;
            rec.segment = k + 1;
            rec.left = partition.left(k);
            rec.right = partition.right(k);

            NetworkParameters init;
            if (round == 1) {
                if (k == 0) {
                    init = xavier_init(spec, config.seed);
                    rec.init = InitSource::Xavier;
                } else {
                    init = current[k - 1].params;
                    rec.init = InitSource::Transfer;
                }
            } else {
                init = current[k].params;
                rec.init = InitSource::PreviousRound;
            }

            if (k == 0) {
                rec.ic_target = problem.initial_value;
            } else if (round > 1 && options.freeze_ic_after_round1) {
                rec.ic_target = round1_targets[k];
            } else {
                rec.ic_target = evaluate(current[k - 1], rec.left);
            }
            if (round == 1) round1_targets[k] = rec.ic_target;

            rec.initial_parameters = init.export_flat();
            SegmentNetwork net(std::move(init), rec.left, rec.right, rec.ic_target);

            const auto seg_start = clock::now();
            SegmentTrainingResult trained;
            try {
                trained = train_segment(std::move(net), problem, collocation[k], rec.ic_target, config, round);
            } catch (const DivergenceError& e) {
                DivergenceError::Context ctx;
                ctx.segment = k + 1;
                ctx.round = round;
                const DivergenceError full = e.with_context(ctx);
                report.error = full.what();
                report.wall_seconds = std::chrono::duration<double>(clock::now() - start).count();
                throw RunAborted(full, std::move(report));
            }
            rec.wall_seconds = std::chrono::duration<double>(clock::now() - seg_start).count();
            rec.final_parameters = trained.net.params.export_flat();
            rec.final_loss = trained.final_loss;
            rec.iterations = trained.iterations;
            rec.trace = std::move(trained.trace);
            current[k] = std::move(trained.net);
            report.records.push_back(std::move(rec));
        }
    }

    PwnnResult result;
    result.solution = PiecewiseSolution(partition, std::move(current));
    report.jumps = jump_report(result.solution);
    report.completed = true;
    report.wall_seconds = std::chrono::duration<double>(clock::now() - start).count();
    result.report = std::move(report);
    return result;
}

PwnnResult run_pinn(const OdeProblem& problem, const LayerSpec& spec, const TrainingConfig& config) {
    using clock = std::chrono::steady_clock;
    problem.validate();
    spec.validate();
    config.validate();
    if (spec.outputs() != problem.dimension) throw ShapeError("network outputs do not match problem dimension");

    const auto start = clock::now();
    const Partition whole = make_partition(problem.end, 1);
    const std::vector<double> colloc = segment_collocation(whole, 0, config);

    RunReport report;
    report.problem = problem.name;
    report.spec = spec;
    report.config = config;
    report.partition = whole;

    SegmentNetwork net(xavier_init(spec, config.seed), 0.0, problem.end, problem.initial_value);
    for (std::size_t round = 1; round <= config.rounds; ++round) {
        SegmentRecord rec;
        rec.round = round;
        rec.segment = 1;
        rec.left = 0.0;
        rec.right = problem.end;
        rec.init = round == 1 ? InitSource::Xavier : InitSource::PreviousRound;
        rec.ic_target = problem.initial_value;
        rec.initial_parameters = net.params.export_flat();
        const auto seg_start = clock::now();
        SegmentTrainingResult trained;
        try {
            trained = train_segment(net, problem, colloc, rec.ic_target, config, round);
        } catch (const DivergenceError& e) {
            DivergenceError::Context ctx;
            ctx.segment = 1;
            ctx.round = round;
            const DivergenceError full = e.with_context(ctx);
            report.error = full.what();
            report.wall_seconds = std::chrono::duration<double>(clock::now() - start).count();
            throw RunAborted(full, std::move(report));
        }
        rec.wall_seconds = std::chrono::duration<double>(clock::now() - seg_start).count();
        rec.final_parameters = trained.net.params.export_flat();
        rec.final_loss = trained.final_loss;
        rec.iterations = trained.iterations;
        rec.trace = std::move(trained.trace);
        net = std::move(trained.net);
        report.records.push_back(std::move(rec));
    }

    PwnnResult result;
    result.solution = PiecewiseSolution(whole, {std::move(net)});
    report.completed = true;
    report.wall_seconds = std::chrono::duration<double>(clock::now() - start).count();
    result.report = std::move(report);
    return result;
}

}  // namespace pwnn
