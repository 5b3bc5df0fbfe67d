#include "pwnn/io.hpp"

#include <fstream>

namespace pwnn {

namespace {

nlohmann::json loss_json(const LossBreakdown& l) {
    return {{"residual", l.residual}, {"ic", l.ic}, {"total", l.total}};
}

}  // namespace

nlohmann::json report_to_json(const RunReport& report) {
    nlohmann::json j;
    j["problem"] = report.problem;
    j["completed"] = report.completed;
    if (!report.error.empty()) j["error"] = report.error;
    j["wall_seconds"] = report.wall_seconds;
    j["network"] = {{"sizes", report.spec.sizes},
                    {"activation", to_string(report.spec.activation)},
                    {"normalize_input", report.spec.normalize_input}};
    const TrainingConfig& c = report.config;
    j["training"] = {{"learning_rates", c.learning_rates}, {"max_iterations", c.max_iterations},
                     {"epsilon", c.epsilon},               {"points", c.points},
                     {"seed", c.seed},                     {"rounds", c.rounds},
                     {"sampling", to_string(c.sampling)},  {"keep_best", c.keep_best},
                     {"gradient_check", c.gradient_check}};
    j["freeze_ic_after_round1"] = report.options.freeze_ic_after_round1;
    j["breakpoints"] = report.partition.breakpoints;

    nlohmann::json records = nlohmann::json::array();
    for (const auto& r : report.records) {
        records.push_back({{"round", r.round},
                           {"segment", r.segment},
                           {"interval", {r.left, r.right}},
                           {"init", to_string(r.init)},
                           {"ic_target", r.ic_target},
                           {"final_loss", loss_json(r.final_loss)},
                           {"iterations", r.iterations},
                           {"wall_seconds", r.wall_seconds}});
    }
    j["segments"] = std::move(records);

    nlohmann::json jumps = nlohmann::json::array();
    for (const auto& e : report.jumps) {
        jumps.push_back({{"breakpoint", e.breakpoint},
                         {"x", e.x},
                         {"left", e.left},
                         {"right", e.right},
                         {"jump", e.jump},
                         {"euclidean", e.euclidean}});
    }
    j["jumps"] = std::move(jumps);
    j["round_losses"] = report.round_losses();
    j["round_means"] = report.round_means();
    return j;
}

void save_solution(const std::filesystem::path& dir, const PiecewiseSolution& solution) {
    std::filesystem::create_directories(dir);
    const auto& segs = solution.segments();
    const LayerSpec& spec = segs.front().spec();
    nlohmann::json manifest;
    manifest["breakpoints"] = solution.partition().breakpoints;
    manifest["sizes"] = spec.sizes;
    manifest["activation"] = to_string(spec.activation);
    manifest["normalize_input"] = spec.normalize_input;
    nlohmann::json files = nlohmann::json::array();
    nlohmann::json ics = nlohmann::json::array();
    for (std::size_t k = 0; k < segs.size(); ++k) {
        const std::string name = "segment" + std::to_string(k + 1) + ".params";
        save_snapshot(dir / name, segs[k].params);
        files.push_back(name);
        ics.push_back(segs[k].initial_value);
    }
    manifest["snapshots"] = std::move(files);
    manifest["initial_values"] = std::move(ics);
    std::ofstream os(dir / "solution.json");
    if (!os) throw Error("cannot write " + (dir / "solution.json").string());
    os << manifest.dump(2) << '\n';
}

PiecewiseSolution load_solution(const std::filesystem::path& dir) {
    std::ifstream is(dir / "solution.json");
    if (!is) throw Error("cannot read " + (dir / "solution.json").string());
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(is);
        Partition partition = make_partition(manifest.at("breakpoints").get<std::vector<double>>());
        const auto activation = activation_from_string(manifest.at("activation").get<std::string>());
        const bool normalize = manifest.at("normalize_input").get<bool>();
        const auto sizes = manifest.at("sizes").get<std::vector<std::size_t>>();
        const auto& files = manifest.at("snapshots");
        const auto& ics = manifest.at("initial_values");
        if (files.size() != partition.segments() || ics.size() != partition.segments()) {
            throw ShapeError("solution manifest lists the wrong number of segments");
        }
        std::vector<SegmentNetwork> segs;
        for (std::size_t k = 0; k < partition.segments(); ++k) {
            NetworkParameters params = load_snapshot(dir / files[k].get<std::string>(), activation, normalize);
            if (params.spec().sizes != sizes) throw ShapeError("snapshot layer sizes differ from the manifest");
            segs.emplace_back(std::move(params), partition.left(k), partition.right(k),
                              ics[k].get<std::vector<double>>());
        }
        return PiecewiseSolution(std::move(partition), std::move(segs));
    } catch (const nlohmann::json::exception& e) {
        throw Error("malformed solution manifest: " + std::string(e.what()));
    }
}

}  // namespace pwnn
