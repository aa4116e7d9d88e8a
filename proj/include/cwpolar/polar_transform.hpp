#pragma once

// u = x B_N F^{(x)n} over GF(2), where B_N is the bit-reversal permutation.
// Recursively, with a, b the halves of x:
//   u_{2i-1} = T(a)_i xor T(b)_i,  u_{2i} = T(b)_i.
// The map is an involution, so the same routine encodes and decodes.

#include <cstdint>
#include <span>
#include <vector>

#include "cwpolar/error.hpp"

namespace cwpolar {

inline constexpr const char* kPolarConvention = "bit-reversed Kronecker [[1,0],[1,1]]";

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline int log2_exact(std::size_t n) {
  if (!is_power_of_two(n)) throw Error(ErrorCode::kBadLength, "length " + std::to_string(n) + " is not a power of two");
  int k = 0;
  while ((std::size_t{1} << k) < n) ++k;
  return k;
}

inline std::vector<int> polar_transform(std::span<const int> x) {
  const std::size_t n = x.size();
  (void)log2_exact(n);
  if (n == 1) return {x[0]};
  const auto a = polar_transform(x.first(n / 2));
  const auto b = polar_transform(x.last(n / 2));
  std::vector<int> u(n);
  for (std::size_t i = 0; i < n / 2; ++i) {
    u[2 * i] = a[i] ^ b[i];
    u[2 * i + 1] = b[i];
  }
  return u;
}

inline std::vector<int> polar_transform(const std::vector<int>& x) { return polar_transform(std::span<const int>(x)); }

// Same map on a packed word, bit t holding position t+1.
inline std::uint32_t polar_transform_bits(std::uint32_t x, int log_n) {
  if (log_n == 0) return x & 1U;
  const int half = 1 << (log_n - 1);
  const std::uint32_t mask = (half == 32) ? ~0U : ((1U << half) - 1U);
  const std::uint32_t a = polar_transform_bits(x & mask, log_n - 1);
  const std::uint32_t b = polar_transform_bits((x >> half) & mask, log_n - 1);
  std::uint32_t u = 0;
  for (int i = 0; i < half; ++i) {
    const std::uint32_t ai = (a >> i) & 1U;
    const std::uint32_t bi = (b >> i) & 1U;
    u |= (ai ^ bi) << (2 * i);
    u |= bi << (2 * i + 1);
  }
  return u;
}

}  // namespace cwpolar
