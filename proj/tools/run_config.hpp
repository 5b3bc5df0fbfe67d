#pragma once

#include "pwnn/errors.hpp"
#include "pwnn/network.hpp"
#include "pwnn/ode.hpp"
#include "pwnn/piecewise.hpp"
#include "pwnn/trainer.hpp"

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace pwnn::cli {

/// Invalid run configuration. `field` is the dotted path of the offending key
/// (empty for syntax errors, which carry line and column in the message).
class ConfigError : public Error {
public:
    ConfigError(const std::string& field, const std::string& detail, std::size_t line = 0);
    const std::string& field() const noexcept { return field_; }
    const std::string& detail() const noexcept { return detail_; }
    std::size_t line() const noexcept { return line_; }

private:
    std::string field_;
    std::string detail_;
    std::size_t line_;
};

enum class Method { Pinn, Pwnn, Rk4, Compare };

std::string to_string(Method m);
Method method_from_string(const std::string& name);

/// Settings of the monolithic network a `compare` run trains next to the
/// piecewise one. Unset entries fall back to the piecewise settings, with the
/// iteration budget multiplied by the segment count.
struct PinnOverrides {
    std::optional<std::vector<std::size_t>> hidden;
    std::optional<std::size_t> points;
    std::optional<std::vector<double>> learning_rates;
    std::optional<std::size_t> max_iterations;
    std::optional<std::size_t> rounds;
};

struct RunConfig {
    OdeProblem problem = registry_get("example1");
    Method method = Method::Pwnn;
    std::size_t segments = 1;
    std::vector<double> breakpoints;  // explicit partition; overrides `segments` when set
    std::vector<std::size_t> hidden{20, 20};
    Activation activation = Activation::Tanh;
    bool normalize_input = false;
    TrainingConfig training;
    PwnnOptions options;
    PinnOverrides pinn;
    std::size_t grid = 1001;  // evaluation points on [0, T]
    double rk4_step = 0.01;
    std::filesystem::path out = "pwnn_out";

    LayerSpec layer_spec() const;
    Partition partition() const;
    LayerSpec pinn_layer_spec() const;
    TrainingConfig pinn_training() const;
    /// Throws ConfigError naming the field.
    void validate() const;
};

/// Parses a JSON run configuration; keys not given keep their defaults.
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace pwnn::cli
