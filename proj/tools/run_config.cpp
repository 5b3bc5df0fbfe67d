#include "run_config.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace pwnn::cli {

using nlohmann::json;

namespace {

std::string config_message(const std::string& field, const std::string& detail, std::size_t line) {
    std::string msg = field.empty() ? detail : "config field '" + field + "': " + detail;
    if (line > 0) msg += " (line " + std::to_string(line) + ")";
    return msg;
}

}  // namespace

ConfigError::ConfigError(const std::string& field, const std::string& detail, std::size_t line)
    : Error(config_message(field, detail, line)), field_(field), detail_(detail), line_(line) {}

std::string to_string(Method m) {
    switch (m) {
        case Method::Pinn: return "pinn";
        case Method::Pwnn: return "pwnn";
        case Method::Rk4: return "rk4";
        case Method::Compare: return "compare";
    }
    return "?";
}

Method method_from_string(const std::string& name) {
    if (name == "pinn") return Method::Pinn;
    if (name == "pwnn") return Method::Pwnn;
    if (name == "rk4") return Method::Rk4;
    if (name == "compare") return Method::Compare;
    throw ConfigError("method", "unknown method '" + name + "' (expected pinn, pwnn, rk4 or compare)");
}

LayerSpec RunConfig::layer_spec() const {
    LayerSpec spec = LayerSpec::make(hidden, problem.dimension, activation);
    spec.normalize_input = normalize_input;
    return spec;
}

Partition RunConfig::partition() const {
    if (!breakpoints.empty()) return make_partition(breakpoints);
    return make_partition(problem.end, segments);
}

LayerSpec RunConfig::pinn_layer_spec() const {
    LayerSpec spec = LayerSpec::make(pinn.hidden.value_or(hidden), problem.dimension, activation);
    spec.normalize_input = normalize_input;
    return spec;
}

TrainingConfig RunConfig::pinn_training() const {
    TrainingConfig c = training;
    const std::size_t p = breakpoints.empty() ? segments : breakpoints.size() - 1;
    c.points = pinn.points.value_or(training.points);
    c.max_iterations = pinn.max_iterations.value_or(training.max_iterations * p);
    c.rounds = pinn.rounds.value_or(training.rounds);
    if (pinn.learning_rates) c.learning_rates = *pinn.learning_rates;
    return c;
}

namespace {

template <class F>
void wrap(const std::string& field, F&& check) {
    try {
        check();
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(field, e.what());
    }
}

}  // namespace

void RunConfig::validate() const {
    wrap("problem", [&] { problem.validate(); });
    if (method == Method::Pinn && (segments != 1 || !breakpoints.empty())) {
        throw ConfigError("segments", "method pinn uses a single segment");
    }
    if (segments < 1) throw ConfigError("segments", "must be at least 1");
    wrap("network.hidden", [&] {
        if (hidden.empty()) throw ShapeError("need at least one hidden layer");
        layer_spec().validate();
    });
    wrap("training", [&] { training.validate(); });
    wrap(breakpoints.empty() ? "segments" : "breakpoints", [&] {
        const Partition p = partition();
        if (std::abs(p.end() - problem.end) > 1e-12 * problem.end) {
            throw DomainError("last breakpoint must equal the problem end " + std::to_string(problem.end));
        }
    });
    if (method == Method::Compare) {
        wrap("pinn", [&] {
            if (pinn.hidden && pinn.hidden->empty()) throw ShapeError("need at least one hidden layer");
            pinn_layer_spec().validate();
            pinn_training().validate();
        });
    }
    if (grid < 2) throw ConfigError("grid", "need at least two evaluation points");
    if (!(rk4_step > 0.0) || !std::isfinite(rk4_step)) throw ConfigError("rk4_step", "must be positive");
    const double steps = problem.end / rk4_step;
    if (std::abs(steps - std::round(steps)) > 1e-9 * steps) {
        throw ConfigError("rk4_step", "must divide the problem end into a whole number of steps");
    }
    if (out.empty()) throw ConfigError("out", "output directory is empty");
}

namespace {

class Reader {
public:
    explicit Reader(const json& root) : root_(root) {}

    static void expect_keys(const json& obj, const std::string& path, std::initializer_list<const char*> keys) {
        if (!obj.is_object()) throw ConfigError(path, "expected an object");
        const std::set<std::string> allowed(keys.begin(), keys.end());
        for (const auto& item : obj.items()) {
            if (!allowed.count(item.key())) throw ConfigError(join(path, item.key()), "unknown field");
        }
    }

    static std::string join(const std::string& path, const std::string& key) {
        return path.empty() ? key : path + "." + key;
    }

    static std::size_t size(const json& j, const std::string& path) {
        if (j.is_number_unsigned()) return j.get<std::size_t>();
        if (j.is_number_integer() && j.get<long long>() >= 0) return static_cast<std::size_t>(j.get<long long>());
        throw ConfigError(path, "expected a non-negative integer");
    }

    static double real(const json& j, const std::string& path) {
        if (!j.is_number()) throw ConfigError(path, "expected a number");
        return j.get<double>();
    }

    static bool boolean(const json& j, const std::string& path) {
        if (!j.is_boolean()) throw ConfigError(path, "expected true or false");
        return j.get<bool>();
    }

    static std::string text(const json& j, const std::string& path) {
        if (!j.is_string()) throw ConfigError(path, "expected a string");
        return j.get<std::string>();
    }

    static std::vector<double> reals(const json& j, const std::string& path) {
        if (j.is_number()) return {j.get<double>()};
        if (!j.is_array()) throw ConfigError(path, "expected a number or a list of numbers");
        std::vector<double> out;
        for (std::size_t i = 0; i < j.size(); ++i) out.push_back(real(j[i], path + "[" + std::to_string(i) + "]"));
        return out;
    }

    static std::vector<std::size_t> sizes(const json& j, const std::string& path) {
        if (!j.is_array()) throw ConfigError(path, "expected a list of integers");
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < j.size(); ++i) out.push_back(size(j[i], path + "[" + std::to_string(i) + "]"));
        return out;
    }

    static std::vector<std::string> texts(const json& j, const std::string& path) {
        if (!j.is_array()) throw ConfigError(path, "expected a list of strings");
        std::vector<std::string> out;
        for (std::size_t i = 0; i < j.size(); ++i) out.push_back(text(j[i], path + "[" + std::to_string(i) + "]"));
        return out;
    }

    static OdeProblem problem(const json& j) {
        if (j.is_string()) {
            try {
                return registry_get(j.get<std::string>());
            } catch (const RegistryError& e) {
                throw ConfigError("problem", e.what());
            }
        }
        expect_keys(j, "problem", {"name", "rhs", "initial_value", "end", "analytic", "conserved"});
        for (const char* key : {"rhs", "initial_value", "end"}) {
            if (!j.contains(key)) throw ConfigError(join("problem", key), "missing");
        }
        const std::string name = j.contains("name") ? text(j["name"], "problem.name") : "custom";
        const auto rhs = texts(j["rhs"], "problem.rhs");
        const auto y0 = reals(j["initial_value"], "problem.initial_value");
        const double end = real(j["end"], "problem.end");
        std::vector<std::string> analytic;
        if (j.contains("analytic")) analytic = texts(j["analytic"], "problem.analytic");
        std::vector<std::pair<std::string, double>> conserved;
        if (j.contains("conserved")) {
            const json& list = j["conserved"];
            if (!list.is_array()) throw ConfigError("problem.conserved", "expected a list");
            for (std::size_t i = 0; i < list.size(); ++i) {
                const std::string path = "problem.conserved[" + std::to_string(i) + "]";
                expect_keys(list[i], path, {"expression", "value"});
                if (!list[i].contains("expression") || !list[i].contains("value")) {
                    throw ConfigError(path, "needs 'expression' and 'value'");
                }
                conserved.emplace_back(text(list[i]["expression"], path + ".expression"),
                                       real(list[i]["value"], path + ".value"));
            }
        }
        try {
            return OdeProblem::from_text(name, rhs, y0, end, analytic, conserved);
        } catch (const Error& e) {
            throw ConfigError("problem", e.what());
        }
    }

    RunConfig read() const {
        RunConfig c;
        expect_keys(root_, "", {"problem", "end", "method", "segments", "breakpoints", "network", "training", "pinn",
                                "seed", "grid", "rk4_step", "out"});
        if (root_.contains("problem")) c.problem = problem(root_["problem"]);
        if (root_.contains("end")) {
            c.problem.end = real(root_["end"], "end");
            if (!(c.problem.end > 0.0)) throw ConfigError("end", "must be positive");
        }
        if (root_.contains("method")) c.method = method_from_string(text(root_["method"], "method"));
        if (root_.contains("segments")) c.segments = size(root_["segments"], "segments");
        if (root_.contains("breakpoints")) c.breakpoints = reals(root_["breakpoints"], "breakpoints");

        if (root_.contains("network")) {
            const json& n = root_["network"];
            expect_keys(n, "network", {"hidden", "activation", "normalize_input"});
            if (n.contains("hidden")) c.hidden = sizes(n["hidden"], "network.hidden");
            if (n.contains("activation")) {
                try {
                    c.activation = activation_from_string(text(n["activation"], "network.activation"));
                } catch (const ConfigError&) {
                    throw;
                } catch (const Error& e) {
                    throw ConfigError("network.activation", e.what());
                }
            }
            if (n.contains("normalize_input")) c.normalize_input = boolean(n["normalize_input"], "network.normalize_input");
        }

        if (root_.contains("training")) {
            const json& t = root_["training"];
            expect_keys(t, "training", {"learning_rates", "max_iterations", "epsilon", "points", "rounds", "sampling",
                                        "keep_best", "gradient_check", "freeze_ic_after_round1"});
            TrainingConfig& tc = c.training;
            if (t.contains("learning_rates")) tc.learning_rates = reals(t["learning_rates"], "training.learning_rates");
            if (t.contains("max_iterations")) tc.max_iterations = size(t["max_iterations"], "training.max_iterations");
            if (t.contains("epsilon")) tc.epsilon = real(t["epsilon"], "training.epsilon");
            if (t.contains("points")) tc.points = size(t["points"], "training.points");
            if (t.contains("rounds")) tc.rounds = size(t["rounds"], "training.rounds");
            if (t.contains("sampling")) {
                try {
                    tc.sampling = sampling_from_string(text(t["sampling"], "training.sampling"));
                } catch (const ConfigError&) {
                    throw;
                } catch (const Error& e) {
                    throw ConfigError("training.sampling", e.what());
                }
            }
            if (t.contains("keep_best")) tc.keep_best = boolean(t["keep_best"], "training.keep_best");
            if (t.contains("gradient_check")) tc.gradient_check = boolean(t["gradient_check"], "training.gradient_check");
            if (t.contains("freeze_ic_after_round1")) {
                c.options.freeze_ic_after_round1 =
                    boolean(t["freeze_ic_after_round1"], "training.freeze_ic_after_round1");
            }
        }

        if (root_.contains("pinn")) {
            const json& p = root_["pinn"];
            expect_keys(p, "pinn", {"hidden", "points", "learning_rates", "max_iterations", "rounds"});
            if (p.contains("hidden")) c.pinn.hidden = sizes(p["hidden"], "pinn.hidden");
            if (p.contains("points")) c.pinn.points = size(p["points"], "pinn.points");
            if (p.contains("learning_rates")) c.pinn.learning_rates = reals(p["learning_rates"], "pinn.learning_rates");
            if (p.contains("max_iterations")) c.pinn.max_iterations = size(p["max_iterations"], "pinn.max_iterations");
            if (p.contains("rounds")) c.pinn.rounds = size(p["rounds"], "pinn.rounds");
        }

        if (root_.contains("seed")) c.training.seed = size(root_["seed"], "seed");
        if (root_.contains("grid")) c.grid = size(root_["grid"], "grid");
        if (root_.contains("rk4_step")) c.rk4_step = real(root_["rk4_step"], "rk4_step");
        if (root_.contains("out")) c.out = text(root_["out"], "out");
        return c;
    }

private:
    const json& root_;
};

/// 1-based line of the last key of a dotted field path, searched textually
/// after the lines of its parents. 0 when not found.
std::size_t locate_field(const std::string& text, const std::string& field) {
    std::size_t pos = 0;
    std::size_t found = std::string::npos;
    std::stringstream parts(field);
    std::string part;
    while (std::getline(parts, part, '.')) {
        const auto bracket = part.find('[');
        if (bracket != std::string::npos) part.resize(bracket);
        const std::size_t at = text.find("\"" + part + "\"", pos);
        if (at == std::string::npos) break;
        found = at;
        pos = at + 1;
    }
    if (found == std::string::npos) return 0;
    std::size_t line = 1;
    for (std::size_t i = 0; i < found; ++i) line += text[i] == '\n';
    return line;
}

}  // namespace

RunConfig parse_run_config(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("", std::string("config syntax error: ") + e.what());
    }
    try {
        RunConfig c = Reader(root).read();
        c.validate();
        return c;
    } catch (const ConfigError& e) {
        const std::size_t line = e.field().empty() ? 0 : locate_field(text, e.field());
        if (line == 0) throw;
        throw ConfigError(e.field(), e.detail(), line);
    }
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("", "cannot open config file " + path.string());
    std::stringstream buffer;
    buffer << is.rdbuf();
    return parse_run_config(buffer.str());
}

}  // namespace pwnn::cli
