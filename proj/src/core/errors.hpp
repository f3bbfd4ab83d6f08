#pragma once

#include <stdexcept>
#include <string>

namespace legigpt {

enum class errc {
    io,
    parse,
    invalid_argument,
    state,
    provider,
    internal,
};

/// Error thrown by all core operations. Carries a coarse category that the
/// C ABI maps onto status codes.
class Error : public std::runtime_error {
public:
    Error(errc code, std::string message)
        : std::runtime_error(std::move(message)), code_(code) {}

    errc code() const noexcept { return code_; }

private:
    errc code_;
};

inline const char* errc_name(errc c) {
    switch (c) {
        case errc::io: return "io";
        case errc::parse: return "parse";
        case errc::invalid_argument: return "invalid_argument";
        case errc::state: return "state";
        case errc::provider: return "provider";
        case errc::internal: return "internal";
    }
    return "unknown";
}

}  // namespace legigpt
