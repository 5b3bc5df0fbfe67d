#include "pwnn/errors.hpp"

#include <sstream>

namespace pwnn {

ParseError::ParseError(const std::string& what, std::size_t column)
    : Error("column " + std::to_string(column) + ": " + what), column_(column) {}

DivergenceError::DivergenceError(const std::string& detail, Context context)
    : Error(format(detail, context)), detail_(detail), context_(context) {}

DivergenceError DivergenceError::with_context(const Context& outer) const {
    Context merged = context_;
    if (!merged.op_index) merged.op_index = outer.op_index;
    if (!merged.iteration) merged.iteration = outer.iteration;
    if (!merged.segment) merged.segment = outer.segment;
    if (!merged.round) merged.round = outer.round;
    if (!merged.step) merged.step = outer.step;
    return DivergenceError(detail_, merged);
}

std::string DivergenceError::format(const std::string& detail, const Context& context) {
    std::ostringstream os;
    os << "divergence: " << detail;
    if (context.round) os << " [round " << *context.round << "]";
    if (context.segment) os << " [segment " << *context.segment << "]";
    if (context.iteration) os << " [iteration " << *context.iteration << "]";
    if (context.step) os << " [step " << *context.step << "]";
    if (context.op_index) os << " [op " << *context.op_index << "]";
    return os.str();
}

}  // namespace pwnn
