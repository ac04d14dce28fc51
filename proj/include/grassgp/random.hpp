#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>

namespace grassgp {

/// Seedable generator whose output is identical on every platform:
/// std::mt19937_64 is fully specified by the standard, and the floating-point
/// mapping below avoids the implementation-defined std distributions.
class PortableRng {
 public:
  static constexpr std::string_view kName = "mt19937_64/open53";

  explicit PortableRng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on the open interval (0, 1) with 53 random bits.
  double uniform_open() {
    constexpr double kScale = 1.0 / 9007199254740992.0;  // 2^-53
    return (static_cast<double>(engine_() >> 11) + 0.5) * kScale;
  }

  /// Uniform on the open interval (lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform_open(); }

  /// Uniform index in [0, n).
  std::size_t index(std::size_t n) {
    const auto i = static_cast<std::size_t>(uniform_open() * static_cast<double>(n));
    return i < n ? i : n - 1;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace grassgp
