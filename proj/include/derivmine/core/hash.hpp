#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace derivmine {

// 64-bit FNV-1a. Used for content fingerprints, not security.
std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL) noexcept;
std::string hex64(std::uint64_t v);
inline std::string content_hash(std::string_view data) { return hex64(fnv1a64(data)); }

}  // namespace derivmine
