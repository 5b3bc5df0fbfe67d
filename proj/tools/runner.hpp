#pragma once

#include "run_config.hpp"

#include "pwnn/piecewise.hpp"

#include <cstddef>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace pwnn::cli {

/// 17 significant digits, enough to read the exact double back.
std::string format_double(double v);
/// Three significant digits without exponent padding, e.g. 1.19e-4.
std::string format_sci3(double v);

/// Rows are rounds, columns m_1..m_p and the row mean.
std::string emit_round_table(const RunReport& report);
/// Mean loss per round of each run side by side (rounds x {PINN, PWNN}).
std::string emit_comparison_round_table(const RunReport& pinn, const RunReport& pwnn);

/// `points` equidistant x in [0, end]; the last one is exactly `end`.
std::vector<double> evaluation_grid(double end, std::size_t points);

using Values = std::vector<std::vector<double>>;  // [grid point][component]

struct Reference {
    std::string kind;  // "analytic" or "rk4"
    Values values;
};

/// Analytic solution when the problem has one, RK4 interpolated otherwise.
Reference reference_on_grid(const OdeProblem& problem, std::span<const double> grid, double rk4_step);
Values evaluate_on_grid(const PiecewiseSolution& solution, std::span<const double> grid);

struct Deviation {
    std::vector<double> max;   // per component
    std::vector<double> mean;  // per component
    double overall_max() const;
};

Deviation deviation(const Values& approx, const Values& reference);
/// Largest |q(y) - expected| over the grid, one entry per conserved quantity.
std::vector<double> conserved_drift(const OdeProblem& problem, std::span<const double> grid, const Values& values);

void write_solution_csv(const std::filesystem::path& path, std::span<const double> grid, const Values& values);
/// loss_segment{k}_round{i}.csv with columns iteration,residual,ic,total.
void write_loss_traces(const std::filesystem::path& dir, const RunReport& report);
void write_jumps_csv(const std::filesystem::path& path, const JumpReport& jumps);

/// Executes the configured method and writes its artifacts below config.out.
/// Training divergence is rethrown (as RunAborted) after the partial report
/// has been written.
void run(const RunConfig& config, std::ostream& log);

}  // namespace pwnn::cli
