#pragma once

#include <stdexcept>
#include <string>

namespace psd {

enum class ErrorKind { invalid_input, resource_limit, resolution, not_found, config };

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

struct InvalidInput : Error {
    explicit InvalidInput(const std::string& w) : Error(ErrorKind::invalid_input, w) {}
};
struct ResourceLimit : Error {
    explicit ResourceLimit(const std::string& w) : Error(ErrorKind::resource_limit, w) {}
};
// Carries a remediation hint in the message (e.g. which grid parameter to raise).
struct ResolutionError : Error {
    explicit ResolutionError(const std::string& w) : Error(ErrorKind::resolution, w) {}
};
struct NotFound : Error {
    explicit NotFound(const std::string& w) : Error(ErrorKind::not_found, w) {}
};
struct ConfigError : Error {
    explicit ConfigError(const std::string& w) : Error(ErrorKind::config, w) {}
};

}  // namespace psd
