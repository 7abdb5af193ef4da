#pragma once

#include <stdexcept>
#include <string>

namespace cumi {

// Error taxonomy shared by every module. The CLI maps these onto exit codes:
// input/shape/contract problems exit with 2, numeric failures with 3.
struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct ContractError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline constexpr const char* kArtifactVersion = "0.1.0";

}  // namespace cumi
