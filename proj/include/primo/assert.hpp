#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

namespace primo {

// Thrown when a protocol invariant is violated. In simulation runs this is
// fatal: the run is torn down and the diagnostic is surfaced to the caller.
struct ProtocolViolation : std::logic_error {
    explicit ProtocolViolation(const std::string& what) : std::logic_error(what) {}
};

// Raised by the event loop when virtual time stops advancing while events
// keep churning (see Net::run_until).
struct LivelockDetected : std::runtime_error {
    explicit LivelockDetected(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {
[[noreturn]] inline void fail(const char* expr, const char* file, int line, const std::string& msg) {
    std::ostringstream os;
    os << "invariant failed: " << expr << " at " << file << ":" << line;
    if (!msg.empty()) os << " (" << msg << ")";
    throw ProtocolViolation(os.str());
}
}  // namespace detail

}  // namespace primo

#define PRIMO_ASSERT(expr)                                                   \
    do {                                                                     \
        if (!(expr)) ::primo::detail::fail(#expr, __FILE__, __LINE__, ""); \
    } while (0)

#define PRIMO_ASSERT_MSG(expr, msg)                                          \
    do {                                                                     \
        if (!(expr)) ::primo::detail::fail(#expr, __FILE__, __LINE__, (msg)); \
    } while (0)
