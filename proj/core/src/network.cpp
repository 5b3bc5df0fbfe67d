#include "pwnn/network.hpp"

#include "pwnn/errors.hpp"
#include "pwnn/random.hpp"

#include "dot.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <fstream>

namespace pwnn {

std::string to_string(Activation a) {
    switch (a) {
        case Activation::Tanh: return "tanh";
        case Activation::Sin: return "sin";
    }
    return "?";
}

Activation activation_from_string(const std::string& name) {
    if (name == "tanh") return Activation::Tanh;
    if (name == "sin") return Activation::Sin;
    throw ShapeError("unknown activation '" + name + "' (expected tanh or sin)");
}

LayerSpec LayerSpec::make(std::span<const std::size_t> hidden, std::size_t outputs, Activation activation) {
    LayerSpec spec;
    spec.sizes.push_back(1);
    spec.sizes.insert(spec.sizes.end(), hidden.begin(), hidden.end());
    spec.sizes.push_back(outputs);
    spec.activation = activation;
    spec.validate();
    return spec;
}

std::size_t LayerSpec::parameter_count() const {
    std::size_t count = 0;
    for (std::size_t i = 1; i < sizes.size(); ++i) count += sizes[i] * sizes[i - 1] + sizes[i];
    return count;
}

void LayerSpec::validate() const {
    if (sizes.size() < 3) throw ShapeError("layer spec needs an input, at least one hidden and an output layer");
    if (sizes.front() != 1) throw ShapeError("layer spec must have exactly one input neuron");
    for (std::size_t s : sizes) {
        if (s == 0) throw ShapeError("layer sizes must be positive");
    }
}

NetworkParameters::NetworkParameters(LayerSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    flat_.assign(spec_.parameter_count(), 0.0);
}

NetworkParameters::NetworkParameters(LayerSpec spec, std::vector<double> flat) : spec_(std::move(spec)) {
    spec_.validate();
    import_flat(flat);
}

std::size_t NetworkParameters::weight_offset(std::size_t layer) const {
    if (layer == 0 || layer >= spec_.sizes.size()) throw ShapeError("layer index out of range");
    std::size_t offset = 0;
    for (std::size_t i = 1; i < layer; ++i) offset += spec_.sizes[i] * spec_.sizes[i - 1] + spec_.sizes[i];
    return offset;
}

std::size_t NetworkParameters::bias_offset(std::size_t layer) const {
    return weight_offset(layer) + spec_.sizes[layer] * spec_.sizes[layer - 1];
}

double NetworkParameters::weight(std::size_t layer, std::size_t row, std::size_t col) const {
    return flat_[weight_offset(layer) + row * spec_.sizes[layer - 1] + col];
}

double& NetworkParameters::weight(std::size_t layer, std::size_t row, std::size_t col) {
    return flat_[weight_offset(layer) + row * spec_.sizes[layer - 1] + col];
}

double NetworkParameters::bias(std::size_t layer, std::size_t row) const { return flat_[bias_offset(layer) + row]; }

double& NetworkParameters::bias(std::size_t layer, std::size_t row) { return flat_[bias_offset(layer) + row]; }

void NetworkParameters::import_flat(std::span<const double> flat) {
    if (flat.size() != spec_.parameter_count()) {
        throw ShapeError("parameter vector has length " + std::to_string(flat.size()) + ", expected " +
                         std::to_string(spec_.parameter_count()));
    }
    for (double v : flat) {
        if (!std::isfinite(v)) throw ShapeError("parameter vector contains a non-finite entry");
    }
    flat_.assign(flat.begin(), flat.end());
}

NetworkParameters xavier_init(const LayerSpec& spec, std::uint64_t seed) {
    NetworkParameters params(spec);
    Rng rng(seed);
    const auto& s = spec.sizes;
    for (std::size_t layer = 1; layer < s.size(); ++layer) {
        const double bound = std::sqrt(6.0 / static_cast<double>(s[layer - 1] + s[layer]));
        const std::size_t offset = params.weight_offset(layer);
        for (std::size_t k = 0; k < s[layer] * s[layer - 1]; ++k) {
            params.flat()[offset + k] = uniform(rng, -bound, bound);
        }
    }
    return params;
}

SegmentNetwork::SegmentNetwork(NetworkParameters p, double a, double b, std::vector<double> ic)
    : params(std::move(p)), left(a), right(b), initial_value(std::move(ic)) {
    validate();
}

void SegmentNetwork::validate() const {
    if (!(left < right)) throw DomainError("segment interval must satisfy left < right");
    if (initial_value.size() != params.spec().outputs()) {
        throw ShapeError("segment initial value length does not match network outputs");
    }
}

namespace {

struct InputMap {
    double mid = 0.0;
    double scale = 1.0;
    bool active = false;
};

InputMap input_map(const LayerSpec& spec, double left, double right) {
    if (!spec.normalize_input) return {};
    return {0.5 * (left + right), 2.0 / (right - left), true};
}

double activate(Activation a, double z) { return a == Activation::Tanh ? std::tanh(z) : std::sin(z); }

// Forward pass with one tangent direction; mirrors record_network operation by
// operation so both paths round identically.
ValueAndDerivative run(const SegmentNetwork& net, double x, bool with_derivative) {
    const NetworkParameters& p = net.params;
    const LayerSpec& spec = p.spec();
    const auto& s = spec.sizes;
    const InputMap map = input_map(spec, net.left, net.right);

    std::vector<double> u{x};
    std::vector<double> du{1.0};
    if (map.active) {
        u[0] = (x - map.mid) * map.scale;
        du[0] = map.scale;
    }
    std::vector<double> z;
    std::vector<double> dz;
    const std::span<const double> flat = p.flat();
    for (std::size_t layer = 1; layer < s.size(); ++layer) {
        const std::size_t rows = s[layer];
        const std::size_t cols = s[layer - 1];
        const std::size_t w0 = p.weight_offset(layer);
        const std::size_t b0 = w0 + rows * cols;
        z.assign(rows, 0.0);
        dz.assign(rows, 0.0);
        for (std::size_t r = 0; r < rows; ++r) {
            const double* w = flat.data() + w0 + r * cols;
            z[r] = flat[b0 + r] + detail::dot(w, u.data(), cols);
            if (with_derivative) dz[r] = 0.0 + detail::dot(w, du.data(), cols);
        }
        const bool hidden = layer + 1 < s.size();
        if (hidden) {
            for (std::size_t r = 0; r < rows; ++r) {
                const double a = activate(spec.activation, z[r]);
                if (with_derivative) {
                    dz[r] = spec.activation == Activation::Tanh ? (1.0 - a * a) * dz[r] : std::cos(z[r]) * dz[r];
                }
                z[r] = a;
            }
        }
        u.swap(z);
        du.swap(dz);
    }
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (!std::isfinite(u[i]) || (with_derivative && !std::isfinite(du[i]))) {
            throw DivergenceError("non-finite network output", {});
        }
    }
    ValueAndDerivative out;
    out.value = std::move(u);
    if (with_derivative) out.derivative = std::move(du);
    return out;
}

}  // namespace

std::vector<double> evaluate(const SegmentNetwork& net, double x) { return run(net, x, false).value; }

ValueAndDerivative evaluate_with_derivative(const SegmentNetwork& net, double x) { return run(net, x, true); }

std::vector<double> export_params(const SegmentNetwork& net) { return net.params.export_flat(); }

void import_params(SegmentNetwork& net, std::span<const double> flat) { net.params.import_flat(flat); }

std::vector<ad::Var> record_network(ad::Tape& tape, const LayerSpec& spec, ad::VarRange params, ad::Var x,
                                    double left, double right) {
    spec.validate();
    if (params.count != spec.parameter_count()) throw ShapeError("tape parameter range does not match layer spec");
    const auto& s = spec.sizes;
    const InputMap map = input_map(spec, left, right);

    ad::Var input = x;
    if (map.active) input = tape.mul(tape.sub(x, tape.constant(map.mid)), tape.constant(map.scale));
    ad::VarRange prev{input.index(), 1};

    std::uint32_t offset = params.first;
    std::vector<ad::Var> outputs;
    for (std::size_t layer = 1; layer < s.size(); ++layer) {
        const auto rows = static_cast<std::uint32_t>(s[layer]);
        const auto cols = static_cast<std::uint32_t>(s[layer - 1]);
        const std::uint32_t bias0 = offset + rows * cols;
        std::vector<ad::Var> pre(rows);
        for (std::uint32_t r = 0; r < rows; ++r) {
            pre[r] = tape.affine(ad::Var(&tape, bias0 + r), ad::VarRange{offset + r * cols, cols}, prev);
        }
        offset = bias0 + rows;
        if (layer + 1 < s.size()) {
            const auto first = static_cast<std::uint32_t>(tape.size());
            for (std::uint32_t r = 0; r < rows; ++r) {
                if (spec.activation == Activation::Tanh) {
                    tape.tanh(pre[r]);
                } else {
                    tape.sin(pre[r]);
                }
            }
            prev = ad::VarRange{first, rows};
        } else {
            outputs = std::move(pre);
        }
    }
    return outputs;
}

namespace {

void put_u64(std::ostream& os, std::uint64_t v) {
    std::array<char, 8> bytes{};
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xffU);
    os.write(bytes.data(), bytes.size());
}

std::uint64_t get_u64(std::istream& is) {
    std::array<unsigned char, 8> bytes{};
    is.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
    if (!is) throw ShapeError("snapshot truncated");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    return v;
}

}  // namespace

void save_snapshot(const std::filesystem::path& path, const NetworkParameters& params) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw Error("cannot open snapshot for writing: " + path.string());
    const auto& sizes = params.spec().sizes;
    put_u64(os, sizes.size());
    for (std::size_t s : sizes) put_u64(os, s);
    for (double v : params.flat()) put_u64(os, std::bit_cast<std::uint64_t>(v));
    if (!os) throw Error("failed writing snapshot: " + path.string());
}

NetworkParameters load_snapshot(const std::filesystem::path& path, Activation activation, bool normalize_input) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot open snapshot: " + path.string());
    const std::uint64_t layers = get_u64(is);
    if (layers < 3 || layers > 4096) throw ShapeError("snapshot has an implausible layer count");
    LayerSpec spec;
    spec.activation = activation;
    spec.normalize_input = normalize_input;
    for (std::uint64_t i = 0; i < layers; ++i) spec.sizes.push_back(get_u64(is));
    spec.validate();
    std::vector<double> flat(spec.parameter_count());
    for (double& v : flat) v = std::bit_cast<double>(get_u64(is));
    if (is.peek() != std::char_traits<char>::eof()) throw ShapeError("snapshot has trailing bytes");
    return NetworkParameters(std::move(spec), std::move(flat));
}

}  // namespace pwnn
