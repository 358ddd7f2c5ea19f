#pragma once

#include <stdexcept>
#include <string>

namespace hst {

// Error taxonomy. Everything user-triggerable throws one of these so the CLI
// can map failure classes onto distinct exit codes.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ShapeError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

struct NumericError : Error {
    using Error::Error;
};

struct ContractError : Error {
    using Error::Error;
};

struct InputError : Error {
    using Error::Error;
};

}  // namespace hst
