#pragma once

// Straight-line reimplementations used as independent references in tests.
// Nothing here touches the tape.

#include "pwnn/network.hpp"

#include <cmath>
#include <functional>
#include <span>
#include <vector>

namespace oracle {

/// Dense forward pass with explicit matrices rebuilt from the flat layout.
inline std::vector<double> network(const std::vector<std::size_t>& sizes, std::span<const double> flat, double x,
                                   double left = 0.0, double right = 1.0, bool normalize = false) {
    std::vector<double> a{normalize ? (x - 0.5 * (left + right)) * 2.0 / (right - left) : x};
    std::size_t offset = 0;
    for (std::size_t l = 1; l < sizes.size(); ++l) {
        const std::size_t rows = sizes[l], cols = sizes[l - 1];
        std::vector<std::vector<double>> w(rows, std::vector<double>(cols));
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c) w[r][c] = flat[offset + r * cols + c];
        offset += rows * cols;
        std::vector<double> z(rows);
        for (std::size_t r = 0; r < rows; ++r) {
            long double s = flat[offset + r];
            for (std::size_t c = 0; c < cols; ++c) s += static_cast<long double>(w[r][c]) * a[c];
            z[r] = static_cast<double>(s);
        }
        offset += rows;
        if (l + 1 < sizes.size()) {
            for (double& v : z) v = std::tanh(v);
        }
        a = std::move(z);
    }
    return a;
}

/// Central difference of a vector-valued function of x.
inline std::vector<double> derivative(const std::function<std::vector<double>(double)>& f, double x, double h) {
    const auto up = f(x + h);
    const auto down = f(x - h);
    std::vector<double> d(up.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = (up[i] - down[i]) / (2.0 * h);
    return d;
}

/// Example 1 right-hand side written out by hand.
inline std::vector<double> example1_rhs(double x, std::span<const double> y) {
    return {y[1], -y[1] - (2.0 + std::sin(x)) * y[0]};
}

}  // namespace oracle
