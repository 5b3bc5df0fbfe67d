#pragma once

#include "pwnn/errors.hpp"
#include "pwnn/network.hpp"
#include "pwnn/ode.hpp"
#include "pwnn/trainer.hpp"

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace pwnn {

/// 0 = a_0 < a_1 < ... < a_p = T. Segment k (0-based) is [a_k, a_{k+1}].
struct Partition {
    std::vector<double> breakpoints;

    std::size_t segments() const { return breakpoints.size() - 1; }
    double left(std::size_t k) const { return breakpoints[k]; }
    double right(std::size_t k) const { return breakpoints[k + 1]; }
    double end() const { return breakpoints.back(); }
    void validate() const;
};

/// a_k = k T / p.
Partition make_partition(double end, std::size_t segments);
/// Explicit breakpoints; must start at 0 and increase strictly.
Partition make_partition(std::vector<double> breakpoints);

/// Segment networks glued together: x in [0, a_1] belongs to segment 1 and
/// x in (a_{k-1}, a_k] to segment k.
class PiecewiseSolution {
public:
    PiecewiseSolution() = default;
    PiecewiseSolution(Partition partition, std::vector<SegmentNetwork> segments);

    const Partition& partition() const { return partition_; }
    const std::vector<SegmentNetwork>& segments() const { return segments_; }
    std::size_t dimension() const { return segments_.front().spec().outputs(); }

    /// 0-based owning segment; throws DomainError outside [0, T].
    std::size_t segment_index(double x) const;
    std::vector<double> evaluate(double x) const;

private:
    Partition partition_;
    std::vector<SegmentNetwork> segments_;
};

std::vector<double> evaluate_piecewise(const PiecewiseSolution& solution, double x);

struct JumpEntry {
    std::size_t breakpoint = 0;  // k of a_k, 1..p-1
    double x = 0.0;
    std::vector<double> left;   // N^k(a_k)
    std::vector<double> right;  // N^{k+1}(a_k)
    double jump = 0.0;          // max-norm of right - left
    double euclidean = 0.0;     // 2-norm of right - left
};

using JumpReport = std::vector<JumpEntry>;

JumpReport jump_report(const PiecewiseSolution& solution);

enum class InitSource { Xavier, Transfer, PreviousRound };

std::string to_string(InitSource source);

/// One (round, segment) training pass.
struct SegmentRecord {
    std::size_t round = 0;    // 1-based
    std::size_t segment = 0;  // 1-based
    double left = 0.0;
    double right = 0.0;
    InitSource init = InitSource::Xavier;
    std::vector<double> ic_target;
    std::vector<double> initial_parameters;
    std::vector<double> final_parameters;
    LossBreakdown final_loss;
    std::size_t iterations = 0;
    std::vector<LossRecord> trace;
    double wall_seconds = 0.0;
};

struct PwnnOptions {
    /// Keep the round-1 initial-value targets in later rounds instead of
    /// re-evaluating the freshly trained predecessor.
    bool freeze_ic_after_round1 = false;
};

struct RunReport {
    std::string problem;
    LayerSpec spec;
    TrainingConfig config;
    PwnnOptions options;
    Partition partition;
    std::vector<SegmentRecord> records;  // training order
    JumpReport jumps;
    double wall_seconds = 0.0;
    bool completed = false;
    std::string error;

    const SegmentRecord& record(std::size_t round, std::size_t segment) const;
    std::size_t rounds_completed() const;
    /// [round][segment] final total loss of completed rounds.
    std::vector<std::vector<double>> round_losses() const;
    std::vector<double> round_means() const;
};

struct PwnnResult {
    PiecewiseSolution solution;
    RunReport report;
};

/// Collocation points used for segment k (0-based) of a run.
std::vector<double> segment_collocation(const Partition& partition, std::size_t k, const TrainingConfig& config);

/// Round 1 trains left to right, segment 1 from Xavier and segment k from the
/// just-trained segment k-1; later rounds start each segment from its own
/// previous-round parameters. Initial-value targets are N^{k-1}(a_{k-1}) of
/// the current round (y0 for segment 1).
PwnnResult run_pwnn(const OdeProblem& problem, const Partition& partition, const LayerSpec& spec,
                    const TrainingConfig& config, const PwnnOptions& options = {});

/// Monolithic network on [0, T]: Xavier start, then `config.rounds` passes of
/// train_segment with the problem's own initial value, each from the previous
/// pass. Same collocation points as segment 1 of a one-segment partition.
PwnnResult run_pinn(const OdeProblem& problem, const LayerSpec& spec, const TrainingConfig& config);

/// Thrown by run_pwnn when a segment diverges; carries the partial report.
class RunAborted : public DivergenceError {
public:
    RunAborted(const DivergenceError& cause, RunReport partial);
    const RunReport& report() const { return *report_; }

private:
    std::shared_ptr<const RunReport> report_;
};

}  // namespace pwnn
