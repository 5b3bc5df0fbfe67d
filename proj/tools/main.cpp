#include "run_config.hpp"
#include "runner.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <sstream>

namespace {

template <class T>
std::vector<T> parse_list(const std::string& text, const std::string& flag) {
    std::vector<T> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::stringstream one(item);
        T v{};
        if (!(one >> v) || !(one >> std::ws).eof()) {
            throw pwnn::cli::ConfigError(flag, "cannot read '" + item + "'");
        }
        out.push_back(v);
    }
    if (out.empty()) throw pwnn::cli::ConfigError(flag, "empty list");
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Piecewise neural network solver for ODE initial value problems"};

    std::string config_path, problem, method, hidden, lr, out;
    std::optional<std::size_t> segments, points, iters, rounds, grid;
    std::optional<std::uint64_t> seed;
    std::optional<double> rk4_step;
    bool normalize_input = false;
    app.add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
    app.add_option("--problem", problem, "registry problem name");
    app.add_option("--method", method, "pinn, pwnn, rk4 or compare");
    app.add_option("--segments", segments, "number of equal sub-intervals");
    app.add_option("--points", points, "collocation points per segment");
    app.add_option("--lr", lr, "learning rate, or comma-separated per-round schedule");
    app.add_option("--iters", iters, "maximum iterations per segment and round");
    app.add_option("--rounds", rounds, "training rounds");
    app.add_option("--seed", seed, "random seed");
    app.add_option("--hidden", hidden, "hidden layer widths, e.g. 20,20");
    app.add_flag("--normalize-input", normalize_input, "scale network input from the segment onto [-1, 1]");
    app.add_option("--grid", grid, "evaluation grid points on [0, T]");
    app.add_option("--rk4-step", rk4_step, "RK4 reference step");
    app.add_option("--out", out, "output directory");
    CLI11_PARSE(app, argc, argv);

    using namespace pwnn::cli;
    try {
        RunConfig config = config_path.empty() ? RunConfig{} : load_run_config(config_path);
        if (!problem.empty()) {
            try {
                config.problem = pwnn::registry_get(problem);
            } catch (const pwnn::RegistryError& e) {
                throw ConfigError("--problem", e.what());
            }
        }
        if (!method.empty()) config.method = method_from_string(method);
        if (segments) {
            config.segments = *segments;
            config.breakpoints.clear();
        }
        if (points) config.training.points = *points;
        if (!lr.empty()) config.training.learning_rates = parse_list<double>(lr, "--lr");
        if (iters) config.training.max_iterations = *iters;
        if (rounds) config.training.rounds = *rounds;
        if (seed) config.training.seed = *seed;
        if (!hidden.empty()) config.hidden = parse_list<std::size_t>(hidden, "--hidden");
        if (normalize_input) config.normalize_input = true;
        if (grid) config.grid = *grid;
        if (rk4_step) config.rk4_step = *rk4_step;
        if (!out.empty()) config.out = out;
        if (config.method == Method::Pinn && !segments) {
            config.segments = 1;
            config.breakpoints.clear();
        }
        config.validate();

        run(config, std::cout);
        std::cout << "wrote " << config.out.string() << '\n';
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const pwnn::DivergenceError& e) {
        std::cerr << "training diverged: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
