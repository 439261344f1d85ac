#include "psd/error.hpp"

namespace psd {

const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::invalid_input: return "invalid-input";
        case ErrorKind::resource_limit: return "resource-limit";
        case ErrorKind::resolution: return "resolution";
        case ErrorKind::not_found: return "not-found";
        case ErrorKind::config: return "config";
    }
    return "unknown";
}

}  // namespace psd
