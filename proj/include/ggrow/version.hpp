#pragma once

#include <string_view>

namespace ggrow {

inline constexpr std::string_view kLibraryVersion = "0.1.0";

// Name of the pinned random-number generator; bump the suffix if the
// constants ever change, since every stream in the library depends on them.
inline constexpr std::string_view kPrngName = "splitmix64-v1";

}  // namespace ggrow
