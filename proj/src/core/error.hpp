#pragma once

#include <stdexcept>
#include <string>

namespace lsm {

enum class ErrorCode {
    parse,              // malformed input file
    validation,         // input violates a documented invariant
    not_found,          // named speaker/category/debate absent
    insufficient_data,  // a window or sample is empty
    degenerate,         // statistic undefined (zero variance, no defined marker)
    config,             // bad or missing configuration / input file
    io,                 // filesystem failure
    internal,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, std::string message)
        : std::runtime_error(std::move(message)), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

} // namespace lsm
