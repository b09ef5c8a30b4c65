#pragma once

#include <cstdint>
#include <cstdio>
#include <string>

namespace hsn {

inline constexpr const char* kVersion = "hybridstereo 0.1.0";

/// FNV-1a content hash of the version string, hex-encoded; recorded in run
/// manifests so outputs can be traced to a code version.
inline std::string version_hash() {
    std::uint64_t h = 1469598103934665603ULL;
    for (const char* p = kVersion; *p; ++p) {
        h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(*p));
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace hsn
