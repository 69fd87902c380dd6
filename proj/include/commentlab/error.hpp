#pragma once

#include <stdexcept>
#include <string>

namespace commentlab {

/// Raised for contract violations and malformed inputs across the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& message) {
    if (!cond) throw Error(message);
}

} // namespace commentlab
