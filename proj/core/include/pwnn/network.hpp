#pragma once

#include "pwnn/autodiff.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace pwnn {

enum class Activation { Tanh, Sin };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

/// Layer sizes s_0..s_{M+1} of a fully connected network with one input,
/// M >= 1 hidden layers and a linear output layer of n neurons.
struct LayerSpec {
    std::vector<std::size_t> sizes;
    Activation activation = Activation::Tanh;
    /// Map x from the owning segment [a, b] onto [-1, 1] before the first layer.
    bool normalize_input = false;

    /// 1 -> hidden... -> outputs.
    static LayerSpec make(std::span<const std::size_t> hidden, std::size_t outputs,
                          Activation activation = Activation::Tanh);

    std::size_t inputs() const { return sizes.front(); }
    std::size_t outputs() const { return sizes.back(); }
    std::size_t hidden_layers() const { return sizes.size() - 2; }
    /// Sum over layers of s_i * s_{i-1} + s_i.
    std::size_t parameter_count() const;
    /// Throws ShapeError unless s_0 = 1, M >= 1 and every size is positive.
    void validate() const;

    bool same_shape(const LayerSpec& other) const { return sizes == other.sizes; }
    bool operator==(const LayerSpec& other) const = default;
};

/// Weights and biases stored flat, layer by layer: W^i row-major
/// (s_i x s_{i-1}) followed by b^i.
class NetworkParameters {
public:
    NetworkParameters() = default;
    /// All-zero parameters.
    explicit NetworkParameters(LayerSpec spec);
    NetworkParameters(LayerSpec spec, std::vector<double> flat);

    const LayerSpec& spec() const { return spec_; }
    std::span<const double> flat() const { return flat_; }
    std::span<double> flat() { return flat_; }
    std::size_t size() const { return flat_.size(); }

    /// Offset of W^layer in the flat vector; layer is 1-based.
    std::size_t weight_offset(std::size_t layer) const;
    std::size_t bias_offset(std::size_t layer) const;
    double weight(std::size_t layer, std::size_t row, std::size_t col) const;
    double& weight(std::size_t layer, std::size_t row, std::size_t col);
    double bias(std::size_t layer, std::size_t row) const;
    double& bias(std::size_t layer, std::size_t row);

    std::vector<double> export_flat() const { return flat_; }
    /// Throws ShapeError on a length mismatch or non-finite entry.
    void import_flat(std::span<const double> flat);

    bool operator==(const NetworkParameters& other) const = default;

private:
    LayerSpec spec_;
    std::vector<double> flat_;
};

/// Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
NetworkParameters xavier_init(const LayerSpec& spec, std::uint64_t seed);

/// One trained network bound to [left, right] together with the initial value
/// it was fitted to at `left`.
struct SegmentNetwork {
    NetworkParameters params;
    double left = 0.0;
    double right = 1.0;
    std::vector<double> initial_value;

    SegmentNetwork() = default;
    SegmentNetwork(NetworkParameters p, double a, double b, std::vector<double> ic);

    const LayerSpec& spec() const { return params.spec(); }
    void validate() const;
};

struct ValueAndDerivative {
    std::vector<double> value;
    std::vector<double> derivative;
};

std::vector<double> evaluate(const SegmentNetwork& net, double x);
ValueAndDerivative evaluate_with_derivative(const SegmentNetwork& net, double x);

std::vector<double> export_params(const SegmentNetwork& net);
void import_params(SegmentNetwork& net, std::span<const double> flat);

/// Network outputs recorded on a tape as a function of the input leaf `x`.
/// The tape tangent of each output is dN_i/dx.
std::vector<ad::Var> record_network(ad::Tape& tape, const LayerSpec& spec, ad::VarRange params, ad::Var x,
                                    double left, double right);

// Parameter snapshot: u64 layer count, u64 sizes, then the flat parameters as
// f64, all little-endian.
void save_snapshot(const std::filesystem::path& path, const NetworkParameters& params);
NetworkParameters load_snapshot(const std::filesystem::path& path, Activation activation = Activation::Tanh,
                                bool normalize_input = false);

}  // namespace pwnn
