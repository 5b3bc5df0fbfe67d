#include "runner.hpp"

#include "pwnn/io.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

namespace pwnn::cli {

using nlohmann::json;

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string format_sci3(double v) {
    if (!std::isfinite(v)) return format_double(v);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2e", v);
    std::string s = buf;
    const auto e = s.find('e');
    std::string mantissa = s.substr(0, e);
    std::string exponent = s.substr(e + 1);
    std::string sign;
    if (exponent[0] == '-' || exponent[0] == '+') {
        if (exponent[0] == '-') sign = "-";
        exponent.erase(0, 1);
    }
    exponent.erase(0, std::min(exponent.find_first_not_of('0'), exponent.size() - 1));
    return mantissa + "e" + sign + exponent;
}

namespace {

std::string pad(const std::string& s, std::size_t width) {
    return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot write " + path.string());
    return os;
}

}  // namespace

std::string emit_round_table(const RunReport& report) {
    const auto table = report.round_losses();
    const auto means = report.round_means();
    const std::size_t p = report.partition.segments();
    constexpr std::size_t w = 10;
    std::ostringstream os;
    os << pad("round", 6);
    for (std::size_t k = 1; k <= p; ++k) os << pad("m_" + std::to_string(k), w);
    os << pad("mean", w) << '\n';
    for (std::size_t r = 0; r < table.size(); ++r) {
        os << pad(std::to_string(r + 1), 6);
        for (double v : table[r]) os << pad(format_sci3(v), w);
        os << pad(format_sci3(means[r]), w) << '\n';
    }
    return os.str();
}

std::string emit_comparison_round_table(const RunReport& pinn, const RunReport& pwnn) {
    const auto a = pinn.round_means();
    const auto b = pwnn.round_means();
    constexpr std::size_t w = 10;
    std::ostringstream os;
    os << pad("round", 6) << pad("PINN", w) << pad("PWNN", w) << '\n';
    for (std::size_t r = 0; r < std::max(a.size(), b.size()); ++r) {
        os << pad(std::to_string(r + 1), 6) << pad(r < a.size() ? format_sci3(a[r]) : "-", w)
           << pad(r < b.size() ? format_sci3(b[r]) : "-", w) << '\n';
    }
    return os.str();
}

std::vector<double> evaluation_grid(double end, std::size_t points) {
    if (points < 2) throw DomainError("evaluation grid needs at least two points");
    std::vector<double> xs(points);
    for (std::size_t i = 0; i < points; ++i) {
        xs[i] = static_cast<double>(i) * end / static_cast<double>(points - 1);
    }
    xs.back() = end;
    return xs;
}

Reference reference_on_grid(const OdeProblem& problem, std::span<const double> grid, double rk4_step) {
    Reference ref;
    if (problem.has_analytic()) {
        ref.kind = "analytic";
        for (double x : grid) ref.values.push_back(problem.exact(x));
        return ref;
    }
    ref.kind = "rk4";
    const ReferenceTrajectory traj = rk4_solve(problem, rk4_step, problem.end);
    for (double x : grid) ref.values.push_back(traj.at(x));
    return ref;
}

Values evaluate_on_grid(const PiecewiseSolution& solution, std::span<const double> grid) {
    Values out;
    out.reserve(grid.size());
    for (double x : grid) out.push_back(solution.evaluate(x));
    return out;
}

double Deviation::overall_max() const {
    double m = 0.0;
    for (double v : max) m = std::max(m, v);
    return m;
}

Deviation deviation(const Values& approx, const Values& reference) {
    if (approx.size() != reference.size() || approx.empty()) throw ShapeError("deviation: grids differ");
    const std::size_t n = approx.front().size();
    Deviation d{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
    for (std::size_t j = 0; j < approx.size(); ++j) {
        for (std::size_t i = 0; i < n; ++i) {
            const double e = std::abs(approx[j][i] - reference[j][i]);
            d.max[i] = std::max(d.max[i], e);
            d.mean[i] += e;
        }
    }
    for (double& m : d.mean) m /= static_cast<double>(approx.size());
    return d;
}

std::vector<double> conserved_drift(const OdeProblem& problem, std::span<const double> grid, const Values& values) {
    std::vector<double> drift(problem.conserved.size(), 0.0);
    for (std::size_t j = 0; j < grid.size(); ++j) {
        for (std::size_t q = 0; q < drift.size(); ++q) {
            const auto& c = problem.conserved[q];
            drift[q] = std::max(drift[q], std::abs(c.expression(grid[j], values[j]) - c.expected));
        }
    }
    return drift;
}

void write_solution_csv(const std::filesystem::path& path, std::span<const double> grid, const Values& values) {
    auto os = open_out(path);
    os << "x";
    const std::size_t n = values.empty() ? 0 : values.front().size();
    for (std::size_t i = 1; i <= n; ++i) os << ",y" << i;
    os << '\n';
    for (std::size_t j = 0; j < grid.size(); ++j) {
        os << format_double(grid[j]);
        for (double v : values[j]) os << ',' << format_double(v);
        os << '\n';
    }
}

void write_loss_traces(const std::filesystem::path& dir, const RunReport& report) {
    for (const auto& rec : report.records) {
        auto os = open_out(dir / ("loss_segment" + std::to_string(rec.segment) + "_round" + std::to_string(rec.round) +
                                  ".csv"));
        os << "iteration,residual,ic,total\n";
        for (const auto& r : rec.trace) {
            os << r.iteration << ',' << format_double(r.loss.residual) << ',' << format_double(r.loss.ic) << ','
               << format_double(r.loss.total) << '\n';
        }
    }
}

void write_jumps_csv(const std::filesystem::path& path, const JumpReport& jumps) {
    auto os = open_out(path);
    const std::size_t n = jumps.empty() ? 0 : jumps.front().left.size();
    os << "breakpoint,x,jump,euclidean";
    for (std::size_t i = 1; i <= n; ++i) os << ",left_y" << i;
    for (std::size_t i = 1; i <= n; ++i) os << ",right_y" << i;
    os << '\n';
    for (const auto& e : jumps) {
        os << e.breakpoint << ',' << format_double(e.x) << ',' << format_double(e.jump) << ','
           << format_double(e.euclidean);
        for (double v : e.left) os << ',' << format_double(v);
        for (double v : e.right) os << ',' << format_double(v);
        os << '\n';
    }
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
    auto os = open_out(path);
    os << text;
}

void write_json(const std::filesystem::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json accuracy_json(const Reference& ref, const Deviation& d, const std::vector<double>& drift) {
    return {{"reference", ref.kind},
            {"max_deviation", d.max},
            {"mean_deviation", d.mean},
            {"overall_max_deviation", d.overall_max()},
            {"max_conserved_drift", drift}};
}

struct NetworkRun {
    PwnnResult result;
    Values values;
    Deviation dev;
    std::vector<double> drift;
};

void log_records(std::ostream& log, const std::string& label, const RunReport& report) {
    for (const auto& r : report.records) {
        log << label << ": round " << r.round << " segment " << r.segment << " [" << r.left << ", " << r.right
            << "] iterations " << r.iterations << " loss " << format_sci3(r.final_loss.total) << '\n';
    }
}

/// Trains one network method into `dir`. Partial artifacts are written before
/// a divergence is rethrown.
NetworkRun train_into(const std::filesystem::path& dir, const std::string& label, const RunConfig& config,
                      bool piecewise, const std::vector<double>& grid, const Reference& ref, std::ostream& log) {
    std::filesystem::create_directories(dir);
    NetworkRun run;
    try {
        if (piecewise) {
            run.result = run_pwnn(config.problem, config.partition(), config.layer_spec(), config.training,
                                  config.options);
        } else {
            const bool compare = config.method == Method::Compare;
            run.result = run_pinn(config.problem, compare ? config.pinn_layer_spec() : config.layer_spec(),
                                  compare ? config.pinn_training() : config.training);
        }
    } catch (const RunAborted& e) {
        write_loss_traces(dir, e.report());
        write_json(dir / "summary.json", {{"method", label}, {"report", report_to_json(e.report())}});
        throw;
    }
    const RunReport& report = run.result.report;
    log_records(log, label, report);

    run.values = evaluate_on_grid(run.result.solution, grid);
    run.dev = deviation(run.values, ref.values);
    run.drift = conserved_drift(config.problem, grid, run.values);

    write_solution_csv(dir / "solution.csv", grid, run.values);
    write_solution_csv(dir / "reference.csv", grid, ref.values);
    write_loss_traces(dir, report);
    write_jumps_csv(dir / "jumps.csv", report.jumps);
    write_text(dir / "round_table.txt", emit_round_table(report));
    save_solution(dir / "model", run.result.solution);
    write_json(dir / "summary.json", {{"method", label},
                                      {"report", report_to_json(report)},
                                      {"accuracy", accuracy_json(ref, run.dev, run.drift)}});
    log << label << ": max deviation from " << ref.kind << " " << format_sci3(run.dev.overall_max()) << '\n';
    return run;
}

void write_rk4(const std::filesystem::path& dir, const RunConfig& config, const std::vector<double>& grid,
               std::ostream& log) {
    std::filesystem::create_directories(dir);
    const ReferenceTrajectory traj = rk4_solve(config.problem, config.rk4_step, config.problem.end);
    Values values;
    for (double x : grid) values.push_back(traj.at(x));
    write_solution_csv(dir / "solution.csv", grid, values);

    json summary = {{"method", "rk4"},
                    {"problem", config.problem.name},
                    {"step", config.rk4_step},
                    {"steps", traj.size() - 1},
                    {"max_conserved_drift", conserved_drift(config.problem, grid, values)}};
    if (config.problem.has_analytic()) {
        Values exact;
        for (double x : grid) exact.push_back(config.problem.exact(x));
        write_solution_csv(dir / "reference.csv", grid, exact);
        const Deviation d = deviation(values, exact);
        summary["max_deviation"] = d.max;
        summary["mean_deviation"] = d.mean;
        log << "rk4: max deviation from analytic " << format_sci3(d.overall_max()) << '\n';
    }
    write_json(dir / "summary.json", summary);
}

void write_comparison(const std::filesystem::path& path, const std::vector<double>& grid, const NetworkRun& pwnn,
                      const NetworkRun& pinn, const Reference& ref) {
    auto os = open_out(path);
    const std::size_t n = ref.values.front().size();
    os << "x";
    for (const char* prefix : {"pwnn_y", "pinn_y", "ref_y", "pwnn_dev_y", "pinn_dev_y"}) {
        for (std::size_t i = 1; i <= n; ++i) os << ',' << prefix << i;
    }
    os << '\n';
    for (std::size_t j = 0; j < grid.size(); ++j) {
        os << format_double(grid[j]);
        for (const Values* v : {&pwnn.values, &pinn.values, &ref.values}) {
            for (double y : (*v)[j]) os << ',' << format_double(y);
        }
        for (const Values* v : {&pwnn.values, &pinn.values}) {
            for (std::size_t i = 0; i < n; ++i) os << ',' << format_double(std::abs((*v)[j][i] - ref.values[j][i]));
        }
        os << '\n';
    }
}

}  // namespace

void run(const RunConfig& config, std::ostream& log) {
    config.validate();
    const auto& dir = config.out;
    std::filesystem::create_directories(dir);
    const std::vector<double> grid = evaluation_grid(config.problem.end, config.grid);

    switch (config.method) {
        case Method::Rk4:
            write_rk4(dir, config, grid, log);
            return;
        case Method::Pwnn:
        case Method::Pinn: {
            const Reference ref = reference_on_grid(config.problem, grid, config.rk4_step);
            train_into(dir, to_string(config.method), config, config.method == Method::Pwnn, grid, ref, log);
            return;
        }
        case Method::Compare: {
            const Reference ref = reference_on_grid(config.problem, grid, config.rk4_step);
            write_rk4(dir / "rk4", config, grid, log);
            const NetworkRun pwnn = train_into(dir / "pwnn", "pwnn", config, true, grid, ref, log);
            const NetworkRun pinn = train_into(dir / "pinn", "pinn", config, false, grid, ref, log);
            write_comparison(dir / "comparison.csv", grid, pwnn, pinn, ref);
            write_text(dir / "round_table.txt",
                       emit_comparison_round_table(pinn.result.report, pwnn.result.report));
            const double ratio = pwnn.dev.overall_max() > 0.0
                                     ? pinn.dev.overall_max() / pwnn.dev.overall_max()
                                     : std::numeric_limits<double>::infinity();
            write_json(dir / "summary.json",
                       {{"method", "compare"},
                        {"problem", config.problem.name},
                        {"reference", ref.kind},
                        {"pwnn", accuracy_json(ref, pwnn.dev, pwnn.drift)},
                        {"pinn", accuracy_json(ref, pinn.dev, pinn.drift)},
                        {"pinn_over_pwnn_max_deviation", ratio},
                        {"pwnn_round_means", pwnn.result.report.round_means()},
                        {"pinn_round_means", pinn.result.report.round_means()},
                        {"pwnn_jumps", report_to_json(pwnn.result.report)["jumps"]}});
            log << "compare: pinn/pwnn max deviation ratio " << format_sci3(ratio) << '\n';
            return;
        }
    }
}

}  // namespace pwnn::cli
