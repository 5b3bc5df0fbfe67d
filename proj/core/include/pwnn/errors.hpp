#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace pwnn {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Parameter vector or layer signature does not match what was expected.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Argument outside the domain an operation accepts (x outside [0,T], bad interval, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Unknown problem name.
class RegistryError : public Error {
public:
    using Error::Error;
};

/// Malformed right-hand-side expression. `column` is 1-based.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t column);
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t column_;
};

/// A non-finite value appeared while evaluating, integrating or training.
///
/// Carries whatever context the layer that noticed it knew about; outer layers
/// rethrow with more context filled in.
class DivergenceError : public Error {
public:
    struct Context {
        std::optional<std::size_t> op_index;
        std::optional<std::size_t> iteration;
        std::optional<std::size_t> segment;
        std::optional<std::size_t> round;
        std::optional<std::size_t> step;
    };

    DivergenceError(const std::string& detail, Context context);

    const Context& context() const noexcept { return context_; }
    const std::string& detail() const noexcept { return detail_; }

    /// Copy with the unset fields of `outer` merged in.
    DivergenceError with_context(const Context& outer) const;

private:
    static std::string format(const std::string& detail, const Context& context);

    std::string detail_;
    Context context_;
};

/// The gradient reported by the tape disagrees with finite differences.
class GradientCheckError : public Error {
public:
    using Error::Error;
};

}  // namespace pwnn
