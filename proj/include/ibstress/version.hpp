#pragma once

#include <cstdint>
#include <string_view>

namespace ibstress {

inline constexpr std::string_view kToolName = "ibstress";
inline constexpr std::string_view kToolVersion = "0.1.0";

// Version of the master-seed -> per-stream seed derivation. Recorded in
// fitted-parameter files and manifests so old runs stay reproducible if the
// scheme ever changes.
inline constexpr std::uint32_t kSeedScheme = 1;

}  // namespace ibstress
