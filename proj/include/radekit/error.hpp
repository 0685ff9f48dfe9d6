#pragma once

#include <stdexcept>
#include <string>

namespace radekit {

enum class ErrorKind {
    validation,  // bad arguments or violated invariants
    format,      // malformed file contents
    truncated,   // file ended before the declared payload
    io,          // open/read/write failures
    mismatch,    // shape or fingerprint disagreement
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool condition, const std::string& what)
{
    if (!condition) {
        fail(ErrorKind::validation, what);
    }
}

}  // namespace radekit
