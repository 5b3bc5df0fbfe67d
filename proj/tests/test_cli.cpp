#include "run_config.hpp"
#include "runner.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace pwnn;
using namespace pwnn::cli;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

std::filesystem::path scratch(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("pwnn_cli_" + name);
    std::filesystem::remove_all(dir);
    return dir;
}

ConfigError config_error(const std::string& text) {
    try {
        parse_run_config(text);
    } catch (const ConfigError& e) {
        return e;
    }
    ADD_FAILURE() << "no error for " << text;
    return ConfigError("", "");
}

}  // namespace

TEST(Format, Doubles) {
    EXPECT_EQ(format_double(0.1), "0.10000000000000001");
    EXPECT_EQ(std::stod(format_double(1.0 / 3.0)), 1.0 / 3.0);
    EXPECT_EQ(format_sci3(1.19e-4), "1.19e-4");
    EXPECT_EQ(format_sci3(7.884e-3), "7.88e-3");
    EXPECT_EQ(format_sci3(1.59), "1.59e0");
    EXPECT_EQ(format_sci3(123456.0), "1.23e5");
    EXPECT_EQ(format_sci3(0.0), "0.00e0");
    EXPECT_EQ(format_sci3(9.996e-3), "1.00e-2");
}

TEST(Config, DefaultsAndFullFile) {
    const RunConfig d = parse_run_config("{}");
    EXPECT_EQ(d.problem.name, "example1");
    EXPECT_EQ(d.grid, 1001u);
    EXPECT_EQ(d.rk4_step, 0.01);
    EXPECT_EQ(d.method, Method::Pwnn);

    const RunConfig c = parse_run_config(R"json({
        "problem": "example3", "method": "compare", "segments": 5,
        "network": {"hidden": [20, 20], "activation": "tanh", "normalize_input": true},
        "training": {"learning_rates": [0.01, 0.001], "max_iterations": 100, "points": 50, "rounds": 2,
                     "sampling": "random", "epsilon": 0, "keep_best": true, "gradient_check": false,
                     "freeze_ic_after_round1": true},
        "pinn": {"hidden": [30], "points": 80},
        "seed": 9, "grid": 11, "rk4_step": 0.05, "out": "somewhere"
    })json");
    EXPECT_EQ(c.problem.name, "example3");
    EXPECT_EQ(c.method, Method::Compare);
    EXPECT_EQ(c.partition().segments(), 5u);
    EXPECT_TRUE(c.layer_spec().normalize_input);
    EXPECT_EQ(c.training.learning_rates, (std::vector<double>{0.01, 0.001}));
    EXPECT_EQ(c.training.sampling, SamplingMode::Random);
    EXPECT_EQ(c.training.seed, 9u);
    EXPECT_TRUE(c.options.freeze_ic_after_round1);
    EXPECT_EQ(c.pinn_layer_spec().sizes, (std::vector<std::size_t>{1, 30, 2}));
    EXPECT_EQ(c.pinn_training().points, 80u);
    EXPECT_EQ(c.pinn_training().max_iterations, 500u);
    EXPECT_EQ(c.out, "somewhere");
}

TEST(Config, InlineProblem) {
    const RunConfig c = parse_run_config(R"json({
        "problem": {"name": "decay", "rhs": ["-y1"], "initial_value": [1], "end": 2,
                    "analytic": ["exp(-x)"], "conserved": [{"expression": "y1 * exp(x)", "value": 1}]},
        "rk4_step": 0.1
    })json");
    EXPECT_EQ(c.problem.name, "decay");
    EXPECT_EQ(c.problem.dimension, 1u);
    EXPECT_NEAR(c.problem.exact(1.0)[0], std::exp(-1.0), 1e-15);
    ASSERT_EQ(c.problem.conserved.size(), 1u);
}

TEST(Config, ErrorsNameFieldAndLine) {
    ConfigError e = config_error("{\n  \"training\": {\n    \"points\": -3\n  }\n}");
    EXPECT_EQ(e.field(), "training.points");
    EXPECT_EQ(e.line(), 3u);

    e = config_error("{\n \"problem\": \"example9\"\n}");
    EXPECT_EQ(e.field(), "problem");
    EXPECT_EQ(e.line(), 2u);

    e = config_error(R"json({"network": {"hidden": [20], "width": 3}})json");
    EXPECT_EQ(e.field(), "network.width");

    e = config_error(R"json({"problem": {"rhs": ["y1 +"], "initial_value": [0], "end": 1}})json");
    EXPECT_EQ(e.field(), "problem");

    e = config_error(R"json({"method": "pinn", "segments": 3})json");
    EXPECT_EQ(e.field(), "segments");

    e = config_error(R"json({"training": {"rounds": 3, "learning_rates": [0.1, 0.2]}})json");
    EXPECT_EQ(e.field(), "training");

    e = config_error(R"json({"rk4_step": 0.03})json");
    EXPECT_EQ(e.field(), "rk4_step");

    e = config_error(R"json({"breakpoints": [0, 4, 3, 10]})json");
    EXPECT_EQ(e.field(), "breakpoints");

    e = config_error(R"json({"breakpoints": [0, 4, 8]})json");
    EXPECT_EQ(e.field(), "breakpoints");

    e = config_error("{\n \"seed\": 1,\n \"grid\": \n}");
    EXPECT_EQ(e.field(), "");
    EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos);

    EXPECT_THROW(load_run_config("/nonexistent/config.json"), ConfigError);
}

TEST(Grid, EndpointsAndSpacing) {
    const auto g = evaluation_grid(50.0, 1001);
    EXPECT_EQ(g.size(), 1001u);
    EXPECT_EQ(g.front(), 0.0);
    EXPECT_EQ(g.back(), 50.0);
    EXPECT_EQ(g[500], 25.0);
    EXPECT_THROW(evaluation_grid(1.0, 1), DomainError);
}

TEST(RoundTable, ShapeAndMeans) {
    RunReport r;
    r.partition = make_partition(10.0, 3);
    const double losses[2][3] = {{1.19e-4, 6.32e-4, 1.68e-2}, {1.68e-5, 3.42e-4, 1.57e-2}};
    for (std::size_t i = 0; i < 2; ++i) {
        for (std::size_t k = 0; k < 3; ++k) {
            SegmentRecord rec;
            rec.round = i + 1;
            rec.segment = k + 1;
            rec.final_loss.total = losses[i][k];
            r.records.push_back(rec);
        }
    }
    const std::string t = emit_round_table(r);
    std::istringstream is(t);
    std::string header, row1, row2;
    std::getline(is, header);
    std::getline(is, row1);
    std::getline(is, row2);
    EXPECT_NE(header.find("m_3"), std::string::npos);
    EXPECT_NE(header.find("mean"), std::string::npos);
    EXPECT_NE(row1.find("1.19e-4"), std::string::npos);
    EXPECT_NE(row1.find(format_sci3((1.19e-4 + 6.32e-4 + 1.68e-2) / 3)), std::string::npos);
    EXPECT_NE(row2.find("1.57e-2"), std::string::npos);

    RunReport single;
    single.partition = make_partition(1.0, 1);
    SegmentRecord rec;
    rec.round = 1;
    rec.segment = 1;
    rec.final_loss.total = 2.5e-3;
    single.records.push_back(rec);
    const std::string s = emit_round_table(single);
    EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 2);
}

TEST(Run, Rk4MatchesAnalyticExample3) {
    RunConfig c = parse_run_config(R"json({"problem": "example3", "method": "rk4"})json");
    c.out = scratch("rk4");
    std::ostringstream log;
    run(c, log);
    std::ifstream is(c.out / "solution.csv");
    std::string line;
    std::getline(is, line);
    EXPECT_EQ(line, "x,y1,y2");
    std::size_t rows = 0;
    while (std::getline(is, line)) {
        double x, y1, y2;
        char comma;
        std::istringstream row(line);
        row >> x >> comma >> y1 >> comma >> y2;
        EXPECT_NEAR(y1, std::sin(x), 1e-8);
        EXPECT_NEAR(y2, std::cos(2 * x), 1e-8);
        ++rows;
    }
    EXPECT_EQ(rows, 1001u);
    std::filesystem::remove_all(c.out);
}

TEST(Run, PwnnArtifactsAreDeterministic) {
    auto make = [](const std::filesystem::path& out) {
        RunConfig c = parse_run_config(R"json({"problem": "example1", "segments": 3, "network": {"hidden": [6]},
                                           "training": {"max_iterations": 30, "points": 15, "rounds": 2},
                                           "grid": 51})json");
        c.out = out;
        return c;
    };
    const auto a = scratch("det_a"), b = scratch("det_b");
    std::ostringstream log;
    run(make(a), log);
    run(make(b), log);
    std::size_t csvs = 0;
    for (const auto& entry : std::filesystem::directory_iterator(a)) {
        if (entry.path().extension() != ".csv") continue;
        ++csvs;
        EXPECT_EQ(slurp(entry.path()), slurp(b / entry.path().filename())) << entry.path();
    }
    EXPECT_EQ(csvs, 3u + 6u);  // solution, reference, jumps, six loss traces
    EXPECT_TRUE(std::filesystem::exists(a / "round_table.txt"));
    EXPECT_TRUE(std::filesystem::exists(a / "model" / "solution.json"));

    const auto summary = nlohmann::json::parse(slurp(a / "summary.json"));
    EXPECT_EQ(summary["method"], "pwnn");
    EXPECT_EQ(summary["accuracy"]["reference"], "rk4");

    const std::string trace = slurp(a / "loss_segment2_round1.csv");
    EXPECT_EQ(trace.substr(0, trace.find('\n')), "iteration,residual,ic,total");
    EXPECT_EQ(std::count(trace.begin(), trace.end(), '\n'), 32);
    std::filesystem::remove_all(a);
    std::filesystem::remove_all(b);
}

TEST(Run, SummaryIsRecomputableFromCsv) {
    RunConfig c = parse_run_config(R"json({"problem": "example2_sir", "segments": 2, "network": {"hidden": [5]},
                                       "training": {"max_iterations": 20, "points": 10}, "grid": 21})json");
    c.out = scratch("recompute");
    std::ostringstream log;
    run(c, log);
    auto read = [](const std::filesystem::path& p) {
        std::ifstream is(p);
        std::string line;
        std::getline(is, line);
        std::vector<std::vector<double>> rows;
        while (std::getline(is, line)) {
            std::vector<double> row;
            std::stringstream ss(line);
            std::string cell;
            while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
            rows.push_back(row);
        }
        return rows;
    };
    const auto sol = read(c.out / "solution.csv");
    const auto ref = read(c.out / "reference.csv");
    std::vector<double> max(3, 0.0);
    for (std::size_t j = 0; j < sol.size(); ++j)
        for (std::size_t i = 0; i < 3; ++i) max[i] = std::max(max[i], std::abs(sol[j][i + 1] - ref[j][i + 1]));
    const auto summary = nlohmann::json::parse(slurp(c.out / "summary.json"));
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(summary["accuracy"]["max_deviation"][i].get<double>(), max[i]);
    std::filesystem::remove_all(c.out);
}

TEST(Run, CompareWritesAllMethods) {
    RunConfig c = parse_run_config(R"json({"problem": "example3", "method": "compare", "segments": 2, "end": 4,
                                       "network": {"hidden": [6]}, "grid": 41,
                                       "training": {"max_iterations": 10, "points": 10},
                                       "pinn": {"points": 20}})json");
    c.out = scratch("compare");
    std::ostringstream log;
    run(c, log);
    for (const char* f : {"comparison.csv", "summary.json", "round_table.txt", "pwnn/solution.csv",
                          "pinn/solution.csv", "rk4/solution.csv", "pinn/loss_segment1_round1.csv"}) {
        EXPECT_TRUE(std::filesystem::exists(c.out / f)) << f;
    }
    const auto summary = nlohmann::json::parse(slurp(c.out / "summary.json"));
    EXPECT_EQ(summary["reference"], "analytic");
    const std::string pinn_trace = slurp(c.out / "pinn/loss_segment1_round1.csv");
    EXPECT_EQ(std::count(pinn_trace.begin(), pinn_trace.end(), '\n'), 1 + 21);
    std::filesystem::remove_all(c.out);
}

TEST(Run, DivergenceWritesPartialReport) {
    RunConfig c = parse_run_config(R"json({"problem": {"rhs": ["0"], "initial_value": [1e200], "end": 1},
                                       "segments": 1, "network": {"hidden": [3]},
                                       "training": {"max_iterations": 5, "points": 5, "gradient_check": false}})json");
    c.out = scratch("diverge");
    std::ostringstream log;
    EXPECT_THROW(run(c, log), DivergenceError);
    const auto summary = nlohmann::json::parse(slurp(c.out / "summary.json"));
    EXPECT_FALSE(summary["report"]["completed"].get<bool>());
    std::filesystem::remove_all(c.out);
}
