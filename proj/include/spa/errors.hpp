#pragma once

#include <stdexcept>
#include <string>

namespace spa {

/// Base class for all library failures. `code()` is a stable identifier
/// written into CSV error columns.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& what)
        : std::runtime_error(what), code_(std::move(code)) {}
    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

#define SPA_DEFINE_ERROR(Name)                                                \
    class Name : public Error {                                               \
    public:                                                                   \
        explicit Name(const std::string& what) : Error(#Name, what) {}        \
    };

SPA_DEFINE_ERROR(InvalidSpec)
SPA_DEFINE_ERROR(NoMinimumFound)
SPA_DEFINE_ERROR(RootNotBracketed)
SPA_DEFINE_ERROR(AboveThreshold)
SPA_DEFINE_ERROR(GainUnreachable)
SPA_DEFINE_ERROR(DegenerateKerr)
SPA_DEFINE_ERROR(NoSolution)
SPA_DEFINE_ERROR(Unbounded)
SPA_DEFINE_ERROR(MissingPumpCoupling)
SPA_DEFINE_ERROR(Overflow)
SPA_DEFINE_ERROR(SearchFailed)
SPA_DEFINE_ERROR(ConfigError)

#undef SPA_DEFINE_ERROR

/// Fixed-point iteration failure; carries the last iterate.
class NoConvergence : public Error {
public:
    NoConvergence(const std::string& what, double last = 0.0)
        : Error("NoConvergence", what), last_(last) {}
    double last_iterate() const noexcept { return last_; }

private:
    double last_;
};

} // namespace spa
