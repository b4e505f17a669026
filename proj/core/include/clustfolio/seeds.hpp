#pragma once

#include <cstdint>
#include <string_view>

namespace clustfolio {

/// Independent random streams are keyed by role so that, e.g., adding
/// restarts never shifts the t-SNE initialization.
enum class SeedRole : std::uint64_t {
  kTsne = 1,
  kCluster = 2,
  kRandomGrouping = 3,
  kBootstrap = 4,
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// hash(master, role, a, b, c)
std::uint64_t derive_seed(std::uint64_t master, SeedRole role, std::uint64_t a = 0, std::uint64_t b = 0,
                          std::uint64_t c = 0) noexcept;

/// FNV-1a, for keying streams by strategy name.
std::uint64_t hash_label(std::string_view label) noexcept;

}  // namespace clustfolio
