#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace icdlab {

uint64_t fnv1a64(std::string_view bytes, uint64_t seed = 0xcbf29ce484222325ULL);

// 16 lowercase hex digits of the FNV-1a hash.
std::string hex_digest(std::string_view bytes);

}  // namespace icdlab
